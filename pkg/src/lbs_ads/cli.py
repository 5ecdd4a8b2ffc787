from __future__ import annotations

import json
import logging
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path
from typing import Dict, Iterator, List, Optional

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from .audit import AuditLogger, create_audit_logger
from .config import Config, SimConfig, load_sim_config
from .errors import BadCredential, ConfigError, ErrorContext, LbsError, RouteError, get_error_handler, handle_error
from .geo import Circle, GeoPoint
from .ldt import RandomStream
from .progress import tick_progress
from .protocol import Gmlc, MtLrRequest
from .routes import load_routes, position_at, validate_routes
from .sim import run as run_simulation
from .store import Advertiser, UserClass, load_or_create_snapshot, load_snapshot, save_snapshot

console = Console()
err_console = Console(stderr=True)

app = typer.Typer(
    add_completion=False,
    help="""lbs-ads - location-based advertisement simulator driven by spatial triggers

  lbs-ads run --config scenario.json      # play back routes and dispatch ads
  lbs-ads adv add --snapshot db.json ...  # manage advertisers
  lbs-ads user sub --snapshot db.json ... # manage subscribers
  lbs-ads validate --routes routes/       # check route files
  lbs-ads audit --snapshot db.json        # summarize registry changes
""",
)
adv_app = typer.Typer(help="Manage advertisers in a registry snapshot.")
user_app = typer.Typer(help="Manage subscribers in a registry snapshot.")
app.add_typer(adv_app, name="adv")
app.add_typer(user_app, name="user")

LOG_FORMAT = "%(message)s"


def _configure_logging(level: str) -> None:
    logger = logging.getLogger("lbs_ads")
    for handler in logger.handlers[:]:
        if isinstance(handler, RichHandler):
            logger.removeHandler(handler)
    handler = RichHandler(console=err_console, show_path=False, show_time=False)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(handler)
    logger.setLevel(level.upper())


@contextmanager
def _guarded(command: str) -> Iterator[None]:
    """Turn lbs-ads and OS errors into a displayed error plus an exit code."""
    try:
        yield
    except LbsError as exc:
        if exc.context.command is None:
            exc.context.command = command
        raise typer.Exit(code=handle_error(exc))
    except OSError as exc:
        raise typer.Exit(code=handle_error(exc, ErrorContext(command=command)))


@contextmanager
def _registry(command: str, snapshot: Path) -> Iterator[AuditLogger]:
    """Guarded registry change; failures are also recorded in the snapshot's audit log."""
    handler = get_error_handler()
    audit: Optional[AuditLogger] = None
    try:
        with _guarded(command):
            audit = create_audit_logger(snapshot)
            handler.audit_logger = audit
            yield audit
    finally:
        handler.audit_logger = None
        if audit is not None:
            audit.close()


@app.callback()
def main_callback(
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Show debug logs on stderr"),
) -> None:
    _configure_logging("DEBUG" if verbose else "WARNING")


def _parse_overrides(pairs: Optional[List[str]]) -> Dict[str, str]:
    overrides: Dict[str, str] = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got '{pair}'")
        overrides[key.strip()] = value.strip()
    return overrides


def _print_report(report) -> None:
    table = Table(title="Simulation summary", show_header=False)
    table.add_column("metric", style="bold")
    table.add_column("value", justify="right")
    table.add_row("MO-LR reports", str(report.reports))
    table.add_row("Enter events", str(report.enters))
    table.add_row("Exit events", str(report.exits))
    table.add_row("Proximity events", str(report.proximities))
    table.add_row("Messages", str(report.messages))
    for advertiser_id, count in report.per_advertiser.items():
        table.add_row(f"  messages from {advertiser_id}", str(count))
    if report.skipped_routes:
        table.add_row("Skipped routes", ", ".join(report.skipped_routes))
    console.print(table)
    console.print(f"[dim]events:[/dim] {report.events_path}")
    console.print(f"[dim]messages:[/dim] {report.messages_path}")


@app.command()
def run(
    config: Path = typer.Option(..., "--config", help="Scenario config (JSON or YAML)"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the scenario seed"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory for events and messages"),
    set_: Optional[List[str]] = typer.Option(None, "--set", help="Override a config value, e.g. trigger.default_limit=300"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="No progress bar"),
) -> None:
    """Play back routes, evaluate spatial triggers and dispatch advertisements."""
    with _guarded("run"):
        cfg = Config.load(config)
        for key, value in _parse_overrides(set_).items():
            cfg.set(key, value)
        sim_cfg = SimConfig.from_config(cfg, source=config)
        if logging.getLogger("lbs_ads").level > logging.DEBUG:
            _configure_logging(sim_cfg.log_level)
        if seed is not None:
            sim_cfg = replace(sim_cfg, seed=seed)
        if out is not None:
            sim_cfg = replace(sim_cfg, out_dir=out.resolve())

        if quiet:
            report = run_simulation(sim_cfg)
        else:
            with tick_progress(err_console, sim_cfg.ticks) as advance:
                report = run_simulation(sim_cfg, observer=advance)
        _print_report(report)


@adv_app.command("add")
def adv_add(
    snapshot: Path = typer.Option(..., "--snapshot"),
    advertiser_id: str = typer.Option(..., "--id"),
    secret: str = typer.Option(..., "--secret"),
    x: float = typer.Option(..., "--x", help="East coordinate in meters"),
    y: float = typer.Option(..., "--y", help="North coordinate in meters"),
    service: str = typer.Option(..., "--service", help="Service type tag"),
    promo: str = typer.Option("", "--promo", help="Promotional text"),
    limit: Optional[float] = typer.Option(None, "--limit", help="Trigger distance in meters"),
) -> None:
    """Register a new advertiser."""
    with _registry("adv add", snapshot) as audit:
        db = load_or_create_snapshot(snapshot)
        adv = Advertiser(
            advertiser_id=advertiser_id,
            secret=secret,
            position=GeoPoint(x, y),
            service_type=service,
            promo_text=promo,
            trigger_limit=limit,
        )
        db.register_advertiser(adv)
        save_snapshot(db, snapshot)
        audit.log_advertiser_change("register", advertiser_id, {"service_type": service})
        console.print(f"[green]Registered advertiser {advertiser_id}[/green]")


@adv_app.command("update")
def adv_update(
    snapshot: Path = typer.Option(..., "--snapshot"),
    advertiser_id: str = typer.Option(..., "--id"),
    secret: str = typer.Option(..., "--secret"),
    x: Optional[float] = typer.Option(None, "--x"),
    y: Optional[float] = typer.Option(None, "--y"),
    service: Optional[str] = typer.Option(None, "--service"),
    promo: Optional[str] = typer.Option(None, "--promo"),
    limit: Optional[float] = typer.Option(None, "--limit"),
    clear_limit: bool = typer.Option(False, "--clear-limit", help="Fall back to the default trigger limit"),
    new_secret: Optional[str] = typer.Option(None, "--new-secret"),
) -> None:
    """Change an advertiser's record; requires the advertiser's secret."""
    with _registry("adv update", snapshot) as audit:
        db = load_snapshot(snapshot)
        changes: Dict[str, object] = {}
        if x is not None or y is not None:
            current = db.advertisements.get(advertiser_id)
            base = current.position if current else GeoPoint(0.0, 0.0)
            changes["position"] = GeoPoint(base.x if x is None else x, base.y if y is None else y)
        if service is not None:
            changes["service_type"] = service
        if promo is not None:
            changes["promo_text"] = promo
        if clear_limit:
            changes["trigger_limit"] = None
        elif limit is not None:
            changes["trigger_limit"] = limit
        if new_secret is not None:
            changes["secret"] = new_secret

        try:
            db.update_advertiser(advertiser_id, secret, changes)
        except BadCredential:
            audit.log_credential_failure(advertiser_id, "update")
            raise
        save_snapshot(db, snapshot)
        audit.log_advertiser_change("update", advertiser_id, {"fields": sorted(changes)})
        console.print(f"[green]Updated advertiser {advertiser_id}[/green]")


@adv_app.command("rm")
def adv_rm(
    snapshot: Path = typer.Option(..., "--snapshot"),
    advertiser_id: str = typer.Option(..., "--id"),
    secret: str = typer.Option(..., "--secret"),
) -> None:
    """Remove an advertiser; requires the advertiser's secret."""
    with _registry("adv rm", snapshot) as audit:
        db = load_snapshot(snapshot)
        try:
            db.remove_advertiser(advertiser_id, secret)
        except BadCredential:
            audit.log_credential_failure(advertiser_id, "remove")
            raise
        save_snapshot(db, snapshot)
        audit.log_advertiser_change("remove", advertiser_id)
        console.print(f"[green]Removed advertiser {advertiser_id}[/green]")


@adv_app.command("list")
def adv_list(snapshot: Path = typer.Option(..., "--snapshot")) -> None:
    """List registered advertisers (secrets are never shown)."""
    with _guarded("adv list"):
        db = load_snapshot(snapshot)
        table = Table(title=f"Advertisers ({len(db.advertisements)})")
        for column in ("id", "service", "x", "y", "limit", "promo"):
            table.add_column(column)
        for adv in db.list_advertisers():
            table.add_row(
                adv.advertiser_id,
                adv.service_type,
                f"{adv.position.x:.1f}",
                f"{adv.position.y:.1f}",
                "default" if adv.trigger_limit is None else f"{adv.trigger_limit:g}",
                adv.promo_text,
            )
        console.print(table)


@user_app.command("sub")
def user_sub(
    snapshot: Path = typer.Option(..., "--snapshot"),
    msisdn: str = typer.Option(..., "--msisdn"),
    user_class: UserClass = typer.Option(..., "--class", help="Common, Gprs or GprsGps"),
    services: Optional[List[str]] = typer.Option(None, "--service", help="Service type; repeat for several"),
) -> None:
    """Subscribe a user (or replace an existing subscription)."""
    with _registry("user sub", snapshot) as audit:
        db = load_or_create_snapshot(snapshot)
        profile = db.subscribe_user(msisdn, user_class, services or [])
        save_snapshot(db, snapshot)
        audit.log_user_change(
            "subscribe", msisdn, {"user_class": profile.user_class.value, "subscriptions": sorted(profile.subscriptions)}
        )
        console.print(f"[green]Subscribed {msisdn} ({profile.user_class.value})[/green]")


@user_app.command("unsub")
def user_unsub(
    snapshot: Path = typer.Option(..., "--snapshot"),
    msisdn: str = typer.Option(..., "--msisdn"),
) -> None:
    """Remove a user's subscription."""
    with _registry("user unsub", snapshot) as audit:
        db = load_snapshot(snapshot)
        db.unsubscribe_user(msisdn)
        save_snapshot(db, snapshot)
        audit.log_user_change("unsubscribe", msisdn)
        console.print(f"[green]Unsubscribed {msisdn}[/green]")


@user_app.command("app")
def user_app_state(
    snapshot: Path = typer.Option(..., "--snapshot"),
    msisdn: str = typer.Option(..., "--msisdn"),
    active: bool = typer.Option(..., "--active/--inactive", help="Whether the handset application is running"),
) -> None:
    """Mark the user's handset application as running or closed."""
    with _registry("user app", snapshot) as audit:
        db = load_snapshot(snapshot)
        db.set_app_active(msisdn, active)
        save_snapshot(db, snapshot)
        audit.log_user_change("app", msisdn, {"app_active": active})
        console.print(f"[green]{msisdn} app {'active' if active else 'inactive'}[/green]")


@user_app.command("list")
def user_list(snapshot: Path = typer.Option(..., "--snapshot")) -> None:
    """List subscribers."""
    with _guarded("user list"):
        db = load_snapshot(snapshot)
        table = Table(title=f"Users ({len(db.users)})")
        for column in ("msisdn", "class", "services", "app"):
            table.add_column(column)
        for user in db.list_users():
            table.add_row(
                user.msisdn,
                user.user_class.value,
                ", ".join(sorted(user.subscriptions)),
                "active" if user.app_active else "inactive",
            )
        console.print(table)


@app.command("audit")
def audit_summary(snapshot: Path = typer.Option(..., "--snapshot")) -> None:
    """Summarize the audit log kept beside a registry snapshot."""
    with _guarded("audit"):
        logger = create_audit_logger(snapshot)
        try:
            summary = logger.get_audit_summary()
        finally:
            logger.close()
        table = Table(title=f"Audit log ({summary['total_events']} events)", show_header=False)
        table.add_column("metric", style="bold")
        table.add_column("value", justify="right")
        for event_type, count in sorted(summary["event_types"].items()):
            table.add_row(event_type, str(count))
        table.add_row("failures", str(summary["failures"]))
        console.print(table)


@app.command()
def validate(routes: Path = typer.Option(..., "--routes", help="Route file or directory")) -> None:
    """Schema-check route files without running anything."""
    with _guarded("validate"):
        findings = validate_routes(routes)
        if findings:
            for file, problem in findings:
                err_console.print(f"[red]{file.name}[/red]: {problem}")
            err_console.print(f"[red]{len(findings)} problem(s) found[/red]")
            raise typer.Exit(code=1)
        console.print("[green]Routes OK[/green]")


@app.command()
def locate(
    config: Path = typer.Option(..., "--config", help="Scenario config (JSON or YAML)"),
    client: str = typer.Option(..., "--client", help="LCS client id"),
    msisdn: str = typer.Option(..., "--msisdn"),
    tick: int = typer.Option(0, "--tick", help="Route time used as the mobile's true position"),
) -> None:
    """Answer an MT-LR from an external LCS client (does not touch the ad pipeline)."""
    with _guarded("locate"):
        sim_cfg = load_sim_config(config)
        db = load_snapshot(sim_cfg.snapshot_path)
        routes = {r.msisdn: r for r in load_routes(sim_cfg.routes_path, sim_cfg.projection)}
        if msisdn not in routes:
            raise RouteError(f"no route for msisdn {msisdn}")
        gmlc = Gmlc.create(sim_cfg.base_stations, db, RandomStream(sim_cfg.seed), sim_cfg.lcs_clients, sim_cfg.ta_band)
        report = gmlc.mt_lr(MtLrRequest(client_id=client, msisdn=msisdn), position_at(routes[msisdn], tick), tick)

        fix = report.fix
        if isinstance(fix.region, Circle):
            region = {"shape": "circle", "radius": fix.region.radius}
        else:
            region = {
                "shape": "annular_sector",
                "inner_radius": fix.region.inner_radius,
                "outer_radius": fix.region.outer_radius,
                "start_azimuth": fix.region.start_azimuth,
                "arc_width": fix.region.arc_width,
            }
        console.print_json(json.dumps({
            "msisdn": report.msisdn,
            "timestamp": report.timestamp,
            "method": fix.method.value,
            "x": round(fix.reported.x, 3),
            "y": round(fix.reported.y, 3),
            "region": region,
        }))
