"""Access roles. Admin strictly includes Employee permissions."""

from __future__ import annotations

from enum import Enum


class Role(str, Enum):
    PUBLIC = "public"
    EMPLOYEE = "employee"
    ADMIN = "admin"

    def covers(self, required: "Role") -> bool:
        order = {Role.PUBLIC: 0, Role.EMPLOYEE: 1, Role.ADMIN: 2}
        return order[self] >= order[required]
