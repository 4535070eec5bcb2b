"""HTTP layer: a small router over the standard library's threading server.

Every route is declared with the role it requires; the declaration drives
both enforcement and the route-partition test. Error responses all pass
through one place and carry exactly {"code", "message"} — nothing about
paths, hosts, or key material ever reaches a response body.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import os
import re
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from stillpos.auth import Role
from stillpos.errors import (
    AuthError,
    BadPassphrase,
    ChainError,
    ConfigError,
    ForbiddenError,
    IllegalTransition,
    NothingToSweep,
    SaleTooSmall,
    StaleRates,
    StillPosError,
    StoreError,
    UnknownSale,
    ValidationError,
    WatchOnlyError,
)
from stillpos.ledger.ledger import report_csv

log = logging.getLogger(__name__)

MAX_LONG_POLL_SECONDS = 25.0
MAX_BODY_BYTES = 64 * 1024

_STATUS_BY_CODE = {
    ValidationError: 400,
    SaleTooSmall: 400,
    UnknownSale: 404,
    StaleRates: 503,
    AuthError: 401,
    BadPassphrase: 401,
    ForbiddenError: 403,
    WatchOnlyError: 403,
    NothingToSweep: 409,
    IllegalTransition: 409,
    ChainError: 502,
    StoreError: 500,
    ConfigError: 500,
}


@dataclass(frozen=True)
class Route:
    method: str
    pattern: re.Pattern
    role: Role
    handler: str  # PosApi method name


def _route(method: str, path_regex: str, role: Role, handler: str) -> Route:
    return Route(method, re.compile("^" + path_regex + "$"), role, handler)


@dataclass
class Request:
    method: str
    path: str
    query: dict[str, str]
    headers: dict[str, str]
    body: dict
    role: Role
    path_params: dict[str, str]


@dataclass
class Response:
    status: int
    body: bytes
    content_type: str = "application/json"


def _json_response(status: int, payload) -> Response:
    return Response(status, json.dumps(payload).encode())


class PosApi:
    """Routing and handlers; transport-agnostic for easy testing."""

    def __init__(self, stack, *, employee_token: str, admin_token: str,
                 sales_access: str = "public", default_feerate: int = 10,
                 ui_dir: str | None = None):
        self.stack = stack
        self.employee_token = employee_token
        self.admin_token = admin_token
        self.default_feerate = default_feerate
        self.ui_dir = os.path.abspath(ui_dir) if ui_dir else None
        sales_role = Role.PUBLIC if sales_access == "public" else Role.EMPLOYEE
        self.routes: list[Route] = [
            _route("GET", r"/v1/healthz", Role.PUBLIC, "health"),
            _route("POST", r"/v1/sales", sales_role, "create_sale"),
            _route(
                "GET", r"/v1/sales/(?P<sale_id>[^/]+)/status", Role.PUBLIC, "sale_status"
            ),
            _route("GET", r"/v1/rates", Role.PUBLIC, "rates"),
            _route("GET", r"/v1/report", Role.EMPLOYEE, "report"),
            _route("POST", r"/v1/admin/cashout", Role.ADMIN, "cashout"),
        ]
        if self.ui_dir:
            self.routes.append(
                _route("GET", r"/ui/(?P<asset>[A-Za-z0-9._-]*)", Role.PUBLIC, "static")
            )

    # --- auth ---

    def role_of(self, headers: dict[str, str]) -> Role:
        header = headers.get("authorization", "")
        if not header:
            return Role.PUBLIC
        if not header.lower().startswith("bearer "):
            raise AuthError("unsupported authorization scheme")
        token = header[7:].strip()
        if self.admin_token and token == self.admin_token:
            return Role.ADMIN
        if self.employee_token and token == self.employee_token:
            return Role.EMPLOYEE
        raise AuthError("invalid token")

    # --- dispatch ---

    def dispatch(self, method: str, target: str, headers: dict[str, str],
                 raw_body: bytes) -> Response:
        try:
            parts = urlsplit(target)
            query = {k: v[0] for k, v in parse_qs(parts.query).items()}
            route, params = self._match(method, parts.path)
            role = self.role_of(headers)
            if route.role != Role.PUBLIC:
                if role == Role.PUBLIC:
                    raise AuthError("credential required")
                if not role.covers(route.role):
                    raise ForbiddenError("insufficient role")
            body = {}
            if raw_body:
                if len(raw_body) > MAX_BODY_BYTES:
                    raise ValidationError("request body too large")
                try:
                    body = json.loads(raw_body)
                except json.JSONDecodeError:
                    raise ValidationError("request body is not valid JSON") from None
                if not isinstance(body, dict):
                    raise ValidationError("request body must be a JSON object")
            request = Request(
                method=method,
                path=parts.path,
                query=query,
                headers=headers,
                body=body,
                role=role,
                path_params=params,
            )
            return getattr(self, "handle_" + route.handler)(request)
        except StillPosError as exc:
            return self._error(exc)
        except Exception:
            log.exception("unhandled error for %s %s", method, target)
            return _json_response(500, {"code": "internal", "message": "internal error"})

    def _match(self, method: str, path: str) -> tuple[Route, dict[str, str]]:
        path_exists = False
        for route in self.routes:
            match = route.pattern.match(path)
            if match:
                path_exists = True
                if route.method == method:
                    return route, match.groupdict()
        if path_exists:
            raise ValidationError("method not allowed")
        raise UnknownRoute(path)

    @staticmethod
    def _error(exc: StillPosError) -> Response:
        if isinstance(exc, UnknownRoute):
            return _json_response(404, {"code": "not_found", "message": "no such resource"})
        status = 500
        for klass, code in _STATUS_BY_CODE.items():
            if isinstance(exc, klass):
                status = code
                break
        return _json_response(status, {"code": exc.code, "message": str(exc)})

    # --- handlers ---

    def handle_health(self, request: Request) -> Response:
        return _json_response(200, {"ok": True})

    def handle_static(self, request: Request) -> Response:
        """Serves the built web UI. The asset name pattern admits no path
        separators, so nothing outside ui_dir is reachable."""
        assert self.ui_dir is not None
        name = request.path_params["asset"] or "index.html"
        path = os.path.join(self.ui_dir, name)
        if not os.path.isfile(path):
            raise UnknownRoute(name)
        content_type = mimetypes.guess_type(name)[0] or "application/octet-stream"
        with open(path, "rb") as fh:
            return Response(200, fh.read(), content_type=content_type)

    def handle_create_sale(self, request: Request) -> Response:
        body = request.body
        fiat_cents = body.get("fiat_cents")
        if not isinstance(fiat_cents, int) or isinstance(fiat_cents, bool):
            raise ValidationError("fiat_cents must be an integer number of cents")
        currency = body.get("currency")
        if currency is not None and not (
            isinstance(currency, str) and len(currency) == 3 and currency.isalpha()
        ):
            raise ValidationError("currency must be a 3-letter code")
        note = body.get("note", "")
        if not isinstance(note, str):
            raise ValidationError("note must be a string")
        view = self.stack.create_sale(
            fiat_cents, currency.upper() if currency else None, note
        )
        return _json_response(201, view)

    def handle_sale_status(self, request: Request) -> Response:
        sale_id = request.path_params["sale_id"]
        wait = request.query.get("wait")
        if wait is not None:
            try:
                timeout = min(float(wait), MAX_LONG_POLL_SECONDS)
            except ValueError:
                raise ValidationError("wait must be a number of seconds") from None
            known = request.query.get("version", "")
            known_version = int(known) if known.isdigit() else self.stack.engine.version(sale_id)
            self.stack.ledger.sale(sale_id)  # 404 before blocking
            self.stack.engine.wait_for_change(sale_id, known_version, timeout)
        return _json_response(200, self.stack.sale_status(sale_id))

    def handle_rates(self, request: Request) -> Response:
        pair = request.query.get("pair", "")
        if pair:
            if not re.fullmatch(r"BTC-[A-Za-z]{3}", pair):
                raise ValidationError("pair must look like BTC-CAD")
            fiat = pair.split("-")[1].upper()
        else:
            fiat = self.stack.ledger.branch.default_currency
        return _json_response(200, self.stack.rates_view(fiat))

    def handle_report(self, request: Request) -> Response:
        now = self.stack.clock.now()
        try:
            from_ts = int(request.query.get("from", now - 30 * 86_400))
            to_ts = int(request.query.get("to", now))
        except ValueError:
            raise ValidationError("from/to must be unix timestamps") from None
        result = self.stack.ledger.report(from_ts, to_ts, request.role)
        if "text/csv" in request.headers.get("accept", ""):
            return Response(200, report_csv(result).encode(), content_type="text/csv")
        payload: dict = {
            "rows": [row.__dict__ for row in result.rows],
        }
        if request.role == Role.ADMIN:
            due, reason = self.stack.cashout_flag()
            payload.update(
                {
                    "totals_by_currency": result.totals_by_currency,
                    "address_balances": result.address_balances,
                    "alerts": list(result.alerts),
                    "cashout_due": due,
                    "cashout_reason": reason,
                }
            )
        return _json_response(200, payload)

    def handle_cashout(self, request: Request) -> Response:
        body = request.body
        passphrase = body.get("passphrase", "")
        if not isinstance(passphrase, str) or not passphrase:
            raise ValidationError("passphrase required")
        destination = body.get("destination")
        feerate = body.get("feerate_sat_per_vb", self.default_feerate)
        if not isinstance(feerate, int) or feerate <= 0:
            raise ValidationError("feerate_sat_per_vb must be a positive integer")
        summary = self.stack.cashout(destination, feerate, passphrase)
        return _json_response(200, summary)


class UnknownRoute(StillPosError):
    code = "not_found"


class _Handler(BaseHTTPRequestHandler):
    server_version = "stillpos"
    sys_version = ""  # no python version banner in responses

    def log_message(self, format, *args):  # noqa: A002 (stdlib signature)
        log.debug("%s - %s", self.address_string(), format % args)

    def _serve(self):
        length = int(self.headers.get("Content-Length") or 0)
        raw_body = self.rfile.read(length) if length else b""
        headers = {k.lower(): v for k, v in self.headers.items()}
        response = self.server.api.dispatch(self.command, self.path, headers, raw_body)
        self.send_response(response.status)
        self.send_header("Content-Type", response.content_type)
        self.send_header("Content-Length", str(len(response.body)))
        self.end_headers()
        self.wfile.write(response.body)

    do_GET = _serve
    do_POST = _serve
    do_PUT = _serve
    do_DELETE = _serve


class ApiServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, api: PosApi, host: str, port: int):
        super().__init__((host, port), _Handler)
        self.api = api

    def serve_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, name="api-server", daemon=True)
        thread.start()
        return thread
