import { ApiClient } from "../src/api.js";
import { CashierController } from "../src/cashier.js";
import { stashSale } from "../src/customer.js";

const api = new ApiClient("");

const controller = new CashierController(
  api,
  {
    amountInput: document.getElementById("amount") as HTMLInputElement,
    noteInput: document.getElementById("note") as HTMLInputElement,
    rateDisplay: document.getElementById("rate")!,
    estimateDisplay: document.getElementById("estimate")!,
    alertBox: document.getElementById("alert")!,
    payButton: document.getElementById("pay") as HTMLButtonElement,
  },
  {
    onSaleCreated: (sale) => {
      stashSale(window.sessionStorage, sale);
      window.location.href = `pay.html?sale=${encodeURIComponent(sale.sale_id)}`;
    },
  },
);

void controller.start();
