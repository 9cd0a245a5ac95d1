"""Follower side of the pricing game: user utility, best response and payments."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import UserProfile


class DomainError(ValueError):
    """Shared storage outside the domain where utility is defined."""


class UnattainableStorageError(ValueError):
    """No finite price elicits the requested storage."""


@dataclass(frozen=True)
class PriceQuote:
    unit_price: float
    shared_storage: float
    payment: float


def user_utility(profile: UserProfile, v: float, r: float) -> float:
    """Daily utility of sharing ``v`` GB at unit price ``r``.

    Own-use utility ``a*ln(b*(1 - v/c))`` plus the net caching income ``(r - rho)*v``.
    """
    if profile.c <= 0 or not 0 <= v < profile.c:
        raise DomainError(f"shared storage {v!r} outside [0, {profile.c!r})")
    return profile.a * math.log(profile.b * (1.0 - v / profile.c)) - profile.rho * v + r * v


def best_response(profile: UserProfile, r: float) -> float:
    # U is concave on [0, c); stationary point clamped to the domain.
    if r <= profile.rho:
        return 0.0
    return max(0.0, profile.c - profile.a / (r - profile.rho))


def required_price(profile: UserProfile, v: float) -> float:
    """Unit price at which ``best_response`` returns exactly ``v``."""
    if v < 0:
        raise DomainError(f"shared storage {v!r} is negative")
    if v >= profile.c:
        raise UnattainableStorageError(f"storage {v!r} GB >= capacity {profile.c!r} GB; price diverges")
    return profile.a / (profile.c - v) + profile.rho


def payment(profile: UserProfile, v: float) -> float:
    if v == 0:
        return 0.0
    return required_price(profile, v) * v


def quote(profile: UserProfile, v: float) -> PriceQuote:
    r = required_price(profile, v)
    return PriceQuote(unit_price=r, shared_storage=v, payment=payment(profile, v))
