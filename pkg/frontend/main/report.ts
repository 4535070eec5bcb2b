import { ApiClient } from "../src/api.js";
import { ReportController } from "../src/report.js";

new ReportController(
  new ApiClient(""),
  {
    tokenInput: document.getElementById("token") as HTMLInputElement,
    loginButton: document.getElementById("enter") as HTMLButtonElement,
    loginBox: document.getElementById("login")!,
    reportBox: document.getElementById("report")!,
    tableBody: document.getElementById("rows")!,
    totalsRow: document.getElementById("totals")!,
    cashoutBanner: document.getElementById("cashout")!,
    alertsBox: document.getElementById("alerts")!,
    errorBox: document.getElementById("error")!,
  },
  document,
);
