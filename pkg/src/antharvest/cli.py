"""Command-line surface: runs, protocol comparisons, and the two calculators.

Subcommands:
    run         execute one scenario, write timeline.csv and summary.json
    compare     paired-seed protocol comparison, write compare.csv
    linkbudget  free-space received power / power density report
    harvest     harvested power, current and recharge time at a distance

Scenario configuration is a JSON file; parsing is fail-closed (unknown
keys are errors) so parameter typos surface immediately. All randomness
flows from the single seed, which --seed can override; the effective
seed is recorded in every artifact.
"""

import argparse
import json
import math
import sys
from pathlib import Path

from .energy import Battery, ConsumptionProfile
from .harvester import (HarvestSource, NoHarvestError, default_curves, harvest_at,
                        load_curves, recharge_time)
from .rflink import (AntennaGain, LinkBudget, directional_power_density,
                     friis_received_power, watts_to_dbm, wavelength)
from .routing import AntParams, ProtocolKind
from .sim import Scenario, Simulation, compare_protocols


class ConfigError(ValueError):
    """A scenario configuration file failed validation."""


_CONSUMPTION_KEYS = ("sleep_ua", "idle_ma", "tx_ma", "rx_ma")
_BATTERY_KEYS = ("capacity_mah", "voltage_v", "peukert_n")
_HARVEST_KEYS = ("receiver", "antenna", "position_m", "enabled", "curve_file")
_PARAM_KEYS = ("alpha", "beta", "rho", "phi", "tau_min", "dtau_max", "dtau_min",
               "record_timeout_s", "ant_interval_s", "data_parts", "energy_scale")
_TOP_KEYS = ("seed", "node_count", "area_m", "radio_range_m", "data_rate_bps",
             "packet_size_bits", "cbr_interval_s", "duration_s", "protocol",
             "consumption", "battery", "harvesting", "protocol_params",
             "header_bits", "ant_bits", "idle_between_custody")


def _check_keys(section: dict, allowed, where: str):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}; allowed: {', '.join(allowed)}")


def scenario_from_config(config: dict) -> Scenario:
    """Build a validated Scenario from a parsed configuration mapping."""
    if not isinstance(config, dict):
        raise ConfigError("configuration root must be a JSON object")
    _check_keys(config, _TOP_KEYS, "the configuration root")
    base = Scenario()
    kwargs = {}
    for key in ("seed", "node_count", "radio_range_m", "data_rate_bps",
                "packet_size_bits", "cbr_interval_s", "duration_s",
                "header_bits", "ant_bits", "idle_between_custody"):
        if key in config:
            kwargs[key] = config[key]
    if "area_m" in config:
        area = config["area_m"]
        if not (isinstance(area, (list, tuple)) and len(area) == 2):
            raise ConfigError("area_m must be a [width, height] pair")
        kwargs["area_m"] = (float(area[0]), float(area[1]))
    if "protocol" in config:
        try:
            kwargs["protocol"] = ProtocolKind.from_name(config["protocol"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if "consumption" in config:
        section = config["consumption"]
        _check_keys(section, _CONSUMPTION_KEYS, "consumption")
        kwargs["consumption"] = ConsumptionProfile(**section)
    if "battery" in config:
        section = dict(config["battery"])
        _check_keys(section, _BATTERY_KEYS, "battery")
        kwargs["battery"] = Battery(
            rated_capacity_mah=section.get("capacity_mah", base.battery.rated_capacity_mah),
            voltage_v=section.get("voltage_v", base.battery.voltage_v),
            peukert_n=section.get("peukert_n", base.battery.peukert_n))
    if "protocol_params" in config:
        section = config["protocol_params"]
        _check_keys(section, _PARAM_KEYS, "protocol_params")
        kwargs["params"] = AntParams(**section)
    if config.get("harvesting") is not None:
        section = config["harvesting"]
        _check_keys(section, _HARVEST_KEYS, "harvesting")
        try:
            receiver, antenna = section["receiver"], section["antenna"]
            position = tuple(section["position_m"])
        except KeyError as exc:
            raise ConfigError(f"harvesting section is missing {exc}") from exc
        curves = default_curves()
        if section.get("curve_file"):
            curves.update(load_curves(Path(section["curve_file"]).read_text()))
        try:
            curve = curves[(receiver, antenna)]
        except KeyError:
            pairs = ", ".join(f"{r}/{a}" for r, a in sorted(curves))
            raise ConfigError(f"no harvest curve for {receiver}/{antenna}; "
                              f"available: {pairs}") from None
        kwargs["harvesting"] = HarvestSource(position, curve,
                                             enabled=bool(section.get("enabled", True)))
    try:
        return Scenario(**kwargs).validate()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def scenario_to_config(scenario: Scenario) -> dict:
    """Inverse of scenario_from_config; the result re-parses identically."""
    config = {
        "seed": scenario.seed,
        "node_count": scenario.node_count,
        "area_m": list(scenario.area_m),
        "radio_range_m": scenario.radio_range_m,
        "data_rate_bps": scenario.data_rate_bps,
        "packet_size_bits": scenario.packet_size_bits,
        "cbr_interval_s": scenario.cbr_interval_s,
        "duration_s": scenario.duration_s,
        "protocol": scenario.protocol.value,
        "consumption": {"sleep_ua": scenario.consumption.sleep_ua,
                        "idle_ma": scenario.consumption.idle_ma,
                        "tx_ma": scenario.consumption.tx_ma,
                        "rx_ma": scenario.consumption.rx_ma},
        "battery": {"capacity_mah": scenario.battery.rated_capacity_mah,
                    "voltage_v": scenario.battery.voltage_v,
                    "peukert_n": scenario.battery.peukert_n},
        "harvesting": None,
        "protocol_params": {"alpha": scenario.params.alpha,
                            "beta": scenario.params.beta,
                            "rho": scenario.params.rho,
                            "phi": scenario.params.phi,
                            "tau_min": scenario.params.tau_min,
                            "dtau_max": scenario.params.dtau_max,
                            "dtau_min": scenario.params.dtau_min,
                            "record_timeout_s": scenario.params.record_timeout_s,
                            "ant_interval_s": scenario.params.ant_interval_s,
                            "data_parts": scenario.params.data_parts,
                            "energy_scale": scenario.params.energy_scale},
        "header_bits": scenario.header_bits,
        "ant_bits": scenario.ant_bits,
        "idle_between_custody": scenario.idle_between_custody,
    }
    if scenario.harvesting is not None:
        config["harvesting"] = {"receiver": scenario.harvesting.curve.receiver,
                                "antenna": scenario.harvesting.curve.antenna,
                                "position_m": list(scenario.harvesting.position_m),
                                "enabled": scenario.harvesting.enabled}
    return config


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    if getattr(args, "seed", None) is not None:
        from dataclasses import replace
        scenario = replace(scenario, seed=args.seed)
    return scenario


def cmd_run(args) -> int:
    scenario = _apply_overrides(scenario_from_config(_load_config(args.config)), args)
    simulation = Simulation(scenario)
    timeline = simulation.run()
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "timeline.csv").write_text(timeline.to_csv(seed=scenario.seed))
    summary = simulation.summary()
    summary["config"] = scenario_to_config(scenario)
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if not args.quiet:
        final = timeline.final
        print(f"{scenario.protocol.value} seed={scenario.seed}: "
              f"avg residual {final.average_residual:.4f}, "
              f"min residual {final.minimum_residual:.4f}, "
              f"{final.packets_delivered}/{final.packets_generated} packets delivered")
        print(f"wrote {out_dir / 'timeline.csv'} and {out_dir / 'summary.json'}")
    return 0


def cmd_compare(args) -> int:
    scenario = _apply_overrides(scenario_from_config(_load_config(args.config)), args)
    protocols = [ProtocolKind.from_name(name) for name in args.protocols.split(",") if name]
    if not protocols:
        raise ConfigError("at least one protocol is required")
    if args.reps < 1:
        raise ConfigError(f"--reps must be >= 1, got {args.reps}")
    result = compare_protocols(scenario, protocols, args.reps)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "compare.csv").write_text(result.to_csv(base_seed=scenario.seed))
    if not args.quiet:
        for name, avg, mn in result.aggregates:
            print(f"{name}: mean avg residual {avg:.4f}, mean min residual {mn:.4f}")
        print(f"wrote {out_dir / 'compare.csv'}")
    return 0


def cmd_linkbudget(args) -> int:
    if args.eirp_w is not None:
        tx_power, tx_gain = args.eirp_w, AntennaGain(0.0)
    else:
        tx_power, tx_gain = args.tx_power_w, AntennaGain(args.tx_gain_dbi)
    link = LinkBudget(tx_power_w=tx_power, tx_gain=tx_gain,
                      rx_gain=AntennaGain(args.rx_gain_dbi),
                      frequency_hz=args.frequency_hz, distance_m=args.distance_m)
    received = friis_received_power(link)
    density = directional_power_density(link.tx_power_w, link.tx_gain, link.distance_m)
    print(f"wavelength:       {wavelength(link.frequency_hz):.6f} m")
    print(f"EIRP:             {link.eirp_w:.6g} W")
    print(f"received power:   {received:.6g} W ({received * 1e3:.4f} mW, "
          f"{watts_to_dbm(received):.2f} dBm)")
    print(f"power density:    {density:.6g} W/m^2 at {args.distance_m:g} m")
    return 0


def cmd_harvest(args) -> int:
    curves = default_curves()
    if args.curves:
        curves.update(load_curves(Path(args.curves).read_text()))
    try:
        curve = curves[(args.receiver, args.antenna)]
    except KeyError:
        pairs = ", ".join(f"{r}/{a}" for r, a in sorted(curves))
        raise ConfigError(f"no harvest curve for {args.receiver}/{args.antenna}; "
                          f"available: {pairs}") from None
    power, current = harvest_at(curve, args.distance_ft)
    print(f"{curve.receiver}/{curve.antenna} at {args.distance_ft:g} ft:")
    if power == 0.0:
        print(f"harvested power:  0 uW (out of range: beyond the last "
              f"measured knot at {curve.max_distance_ft:g} ft)")
        return 0
    print(f"harvested power:  {power:.1f} uW")
    print(f"charging current: {current:.1f} uA")
    if args.drawn_mah is not None:
        try:
            hours = recharge_time(args.drawn_mah, current)
        except NoHarvestError:
            print("recharge time:    never (no charging current)")
        else:
            print(f"recharge time:    {hours:.2f} h to replenish {args.drawn_mah:g} mAh")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="antharvest",
        description="Energy-harvesting sensor network simulator with ant-based routing")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario and write CSV artifacts")
    run_p.add_argument("--config", help="JSON scenario configuration (defaults apply if omitted)")
    run_p.add_argument("--seed", type=int, help="override the configured seed")
    run_p.add_argument("--out-dir", default=".", help="directory for timeline.csv / summary.json")
    run_p.add_argument("--quiet", action="store_true", help="suppress the console summary")
    run_p.set_defaults(func=cmd_run)

    cmp_p = sub.add_parser("compare", help="paired-seed protocol comparison")
    cmp_p.add_argument("--config", help="JSON scenario configuration (defaults apply if omitted)")
    cmp_p.add_argument("--seed", type=int, help="override the configured base seed")
    cmp_p.add_argument("--protocols", default="IEEABR,EEABR,MinHop",
                       help="comma-separated protocol list (default: all three)")
    cmp_p.add_argument("--reps", type=int, default=5, help="paired repetitions (default 5)")
    cmp_p.add_argument("--out-dir", default=".", help="directory for compare.csv")
    cmp_p.add_argument("--quiet", action="store_true", help="suppress the console summary")
    cmp_p.set_defaults(func=cmd_compare)

    lb_p = sub.add_parser("linkbudget", help="free-space link budget report")
    group = lb_p.add_mutually_exclusive_group(required=True)
    group.add_argument("--eirp-w", type=float, help="transmit EIRP in watts")
    group.add_argument("--tx-power-w", type=float, help="transmit power in watts")
    lb_p.add_argument("--tx-gain-dbi", type=float, default=0.0, help="transmit gain (with --tx-power-w)")
    lb_p.add_argument("--rx-gain-dbi", type=float, default=0.0, help="receive antenna gain")
    lb_p.add_argument("--frequency-hz", type=float, required=True, help="carrier frequency in Hz")
    lb_p.add_argument("--distance-m", type=float, required=True, help="link distance in meters")
    lb_p.set_defaults(func=cmd_linkbudget)

    hv_p = sub.add_parser("harvest", help="harvest curve lookup")
    hv_p.add_argument("--receiver", required=True, help="harvester receiver (P2110 or P1110)")
    hv_p.add_argument("--antenna", required=True, help="antenna type (dipole or patch)")
    hv_p.add_argument("--distance-ft", type=float, required=True, help="distance in feet")
    hv_p.add_argument("--drawn-mah", type=float, help="drawn charge to compute a recharge time for")
    hv_p.add_argument("--curves", help="curve override file (documented text format)")
    hv_p.set_defaults(func=cmd_harvest)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
