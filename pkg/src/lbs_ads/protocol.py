"""Location request flows.

MO-LR: the mobile asks the SMLC for its own fix, the GMLC writes the report to
the info-log and the mobile receives the same report back. MT-LR: an external
LCS client asks the GMLC for a subscriber's fix; the GMLC first verifies the
client's agreement, and the answer never enters the advertisement pipeline.
SMLC and GMLC are stages of one synchronous call.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Sequence, Union

from .errors import AgreementMissing, InvalidRecord, UnknownClient
from .geo import GeoPoint
from .ldt import TA_BAND_M, BaseStation, LdtMethod, RandomStream, measure
from .store import Database, LocationReport, UserClass

logger = logging.getLogger(__name__)

CLASS_METHODS: Dict[UserClass, LdtMethod] = {
    UserClass.COMMON: LdtMethod.CGI_TA,
    UserClass.GPRS: LdtMethod.EOTD,
    UserClass.GPRS_GPS: LdtMethod.AGPS,
}


@dataclass(frozen=True)
class MoLrRequest:
    msisdn: str
    timestamp: int
    # ground truth from the route; never copied into the report
    true_position: GeoPoint


@dataclass(frozen=True)
class LcsClient:
    client_id: str
    agreement: bool

    def __post_init__(self) -> None:
        if not self.client_id:
            raise InvalidRecord("client_id must be non-empty")


@dataclass(frozen=True)
class MtLrRequest:
    client_id: str
    msisdn: str


def class_method(user_class: UserClass) -> LdtMethod:
    return CLASS_METHODS[UserClass(user_class)]


def _client_index(clients: Union[Mapping[str, LcsClient], Iterable[LcsClient]]) -> Mapping[str, LcsClient]:
    if isinstance(clients, Mapping):
        return clients
    index: Dict[str, LcsClient] = {}
    for client in clients:
        if client.client_id in index:
            raise InvalidRecord(f"duplicate LCS client id '{client.client_id}'")
        index[client.client_id] = client
    return index


def _locate(
    msisdn: str,
    timestamp: int,
    true_position: GeoPoint,
    network: Sequence[BaseStation],
    db: Database,
    rng: RandomStream,
    ta_band: float,
) -> LocationReport:
    user = db.require_user(msisdn)
    fix = measure(true_position, class_method(user.user_class), network, rng, ta_band)
    return LocationReport(msisdn=msisdn, fix=fix, timestamp=timestamp)


def handle_mo_lr(
    req: MoLrRequest,
    network: Sequence[BaseStation],
    db: Database,
    rng: RandomStream,
    ta_band: float = TA_BAND_M,
) -> LocationReport:
    """Fix the mobile, log the report to the info-log and return it to the mobile."""
    report = _locate(req.msisdn, req.timestamp, req.true_position, network, db, rng, ta_band)
    db.append_infolog(report)
    return report


def handle_mt_lr(
    req: MtLrRequest,
    clients: Union[Mapping[str, LcsClient], Iterable[LcsClient]],
    network: Sequence[BaseStation],
    db: Database,
    rng: RandomStream,
    true_position: GeoPoint,
    timestamp: int = 0,
    ta_band: float = TA_BAND_M,
) -> LocationReport:
    """Answer an external client's request after agreement verification."""
    client = _client_index(clients).get(req.client_id)
    if client is None:
        raise UnknownClient(f"no LCS client with id '{req.client_id}'")
    if not client.agreement:
        logger.warning("MT-LR from %s rejected: no agreement", req.client_id)
        raise AgreementMissing(f"client '{req.client_id}' has no agreement with the operator")
    report = _locate(req.msisdn, timestamp, true_position, network, db, rng, ta_band)
    logger.info("MT-LR for %s served to %s", req.msisdn, req.client_id)
    return report


@dataclass
class Gmlc:
    """Gateway holding the shared network view and the simulation's random stream."""
    network: Sequence[BaseStation]
    db: Database
    rng: RandomStream
    clients: Dict[str, LcsClient] = field(default_factory=dict)
    ta_band: float = TA_BAND_M

    @classmethod
    def create(
        cls,
        network: Sequence[BaseStation],
        db: Database,
        rng: RandomStream,
        clients: Iterable[LcsClient] = (),
        ta_band: float = TA_BAND_M,
    ) -> "Gmlc":
        return cls(network=list(network), db=db, rng=rng, clients=dict(_client_index(clients)), ta_band=ta_band)

    def mo_lr(self, req: MoLrRequest) -> LocationReport:
        return handle_mo_lr(req, self.network, self.db, self.rng, self.ta_band)

    def mt_lr(self, req: MtLrRequest, true_position: GeoPoint, timestamp: int = 0) -> LocationReport:
        return handle_mt_lr(req, self.clients, self.network, self.db, self.rng, true_position, timestamp, self.ta_band)
