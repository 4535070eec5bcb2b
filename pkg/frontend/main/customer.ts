import { ApiClient } from "../src/api.js";
import { CustomerController, loadSale } from "../src/customer.js";
import { renderQrCanvas } from "../src/qr.js";

const saleId = new URLSearchParams(window.location.search).get("sale") ?? "";
const sale = saleId ? loadSale(window.sessionStorage, saleId) : null;
const stateScreen = document.getElementById("state")!;

if (sale === null) {
  stateScreen.className = "screen failed";
  stateScreen.textContent = "Sale not found on this terminal";
} else {
  const controller = new CustomerController(new ApiClient(""), sale, {
    amountDisplay: document.getElementById("amount")!,
    fiatDisplay: document.getElementById("fiat")!,
    rateDisplay: document.getElementById("rate")!,
    addressDisplay: document.getElementById("address")!,
    countdownDisplay: document.getElementById("countdown")!,
    stateScreen,
    paidDetail: document.getElementById("paid-detail")!,
  });
  void renderQrCanvas(
    document.getElementById("qr") as HTMLCanvasElement,
    sale.qr_payload,
  );
  controller.start();
}
