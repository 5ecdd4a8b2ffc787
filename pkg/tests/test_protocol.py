from __future__ import annotations

import pytest

from lbs_ads.errors import AgreementMissing, InvalidRecord, UnknownClient, UnknownUser
from lbs_ads.geo import AnnularSector, GeoPoint, contains
from lbs_ads.ldt import BaseStation, LdtMethod, RandomStream
from lbs_ads.protocol import (
    Gmlc,
    LcsClient,
    MoLrRequest,
    MtLrRequest,
    class_method,
    handle_mo_lr,
    handle_mt_lr,
)
from lbs_ads.store import UserClass

MSISDN = "923000000001"
NETWORK = [BaseStation("bs-1", GeoPoint(0.0, 0.0))]
CLIENTS = [LcsClient("police", True), LcsClient("broker", False)]


class TestClassMethod:
    @pytest.mark.parametrize("user_class, method", [
        (UserClass.COMMON, LdtMethod.CGI_TA),
        (UserClass.GPRS, LdtMethod.EOTD),
        (UserClass.GPRS_GPS, LdtMethod.AGPS),
    ])
    def test_mapping(self, user_class, method):
        assert class_method(user_class) is method


class TestMoLr:
    """Mobile-originated requests feed the info-log."""

    def test_gprs_gps_user_gets_agps_fix(self, db):
        report = handle_mo_lr(MoLrRequest(MSISDN, 0, GeoPoint(0, 0)), NETWORK, db, RandomStream(1))
        assert len(db.infolog) == 1
        assert report.fix.method is LdtMethod.AGPS
        assert db.infolog[0] == report

    def test_common_user_gets_sector(self, db):
        db.subscribe_user("923000000002", UserClass.COMMON, {"food"})
        report = handle_mo_lr(MoLrRequest("923000000002", 3, GeoPoint(700, 0)), NETWORK, db, RandomStream(1))
        assert isinstance(report.fix.region, AnnularSector)
        assert contains(report.fix.region, GeoPoint(700, 0))
        assert report.timestamp == 3

    def test_unsubscribed_msisdn(self, db):
        with pytest.raises(UnknownUser):
            handle_mo_lr(MoLrRequest("923999999999", 0, GeoPoint(0, 0)), NETWORK, db, RandomStream(1))
        assert db.infolog == []

    def test_same_tick_replaces(self, db):
        rng = RandomStream(5)
        handle_mo_lr(MoLrRequest(MSISDN, 2, GeoPoint(0, 0)), NETWORK, db, rng)
        second = handle_mo_lr(MoLrRequest(MSISDN, 2, GeoPoint(900, 0)), NETWORK, db, rng)
        assert db.infolog == [second]

    def test_report_stream_is_deterministic(self, db):
        def stream(seed):
            rng = RandomStream(seed)
            return [
                handle_mo_lr(MoLrRequest(MSISDN, t, GeoPoint(t * 10.0, 0)), NETWORK, db, rng)
                for t in range(20)
            ]

        assert stream(9) == stream(9)


class TestMtLr:
    """Externally requested fixes bypass the advertisement pipeline."""

    def test_agreed_client_served(self, db):
        report = handle_mt_lr(
            MtLrRequest("police", MSISDN), CLIENTS, NETWORK, db, RandomStream(1), GeoPoint(10, 10), timestamp=4
        )
        assert report.msisdn == MSISDN
        assert report.timestamp == 4
        assert contains(report.fix.region, GeoPoint(10, 10))
        assert db.infolog == []

    def test_agreement_missing(self, db):
        with pytest.raises(AgreementMissing):
            handle_mt_lr(MtLrRequest("broker", MSISDN), CLIENTS, NETWORK, db, RandomStream(1), GeoPoint(0, 0))

    def test_unknown_client(self, db):
        with pytest.raises(UnknownClient):
            handle_mt_lr(MtLrRequest("spy", MSISDN), CLIENTS, NETWORK, db, RandomStream(1), GeoPoint(0, 0))

    def test_unknown_user(self, db):
        with pytest.raises(UnknownUser):
            handle_mt_lr(MtLrRequest("police", "923999999999"), CLIENTS, NETWORK, db, RandomStream(1), GeoPoint(0, 0))

    def test_duplicate_client_ids(self, db):
        with pytest.raises(InvalidRecord):
            handle_mt_lr(
                MtLrRequest("police", MSISDN),
                [LcsClient("police", True), LcsClient("police", False)],
                NETWORK, db, RandomStream(1), GeoPoint(0, 0),
            )


class TestGmlc:
    def test_facade_routes_both_flows(self, db):
        gmlc = Gmlc.create(NETWORK, db, RandomStream(3), CLIENTS)
        mo = gmlc.mo_lr(MoLrRequest(MSISDN, 0, GeoPoint(0, 0)))
        mt = gmlc.mt_lr(MtLrRequest("police", MSISDN), GeoPoint(0, 0), timestamp=1)
        assert db.infolog == [mo]
        assert mt.timestamp == 1
        with pytest.raises(AgreementMissing):
            gmlc.mt_lr(MtLrRequest("broker", MSISDN), GeoPoint(0, 0))
