# cli.py
# Obfuscated LDPC Decoder Lab - Command Line
# One entry point, one subcommand per experiment. Defaults come from
# config.json; a --config file (JSON or key=value) overrides them and explicit
# flags override both. Tables go to stdout or --out as CSV, logs go to stderr.
#
# Exit codes: 0 ok, 1 unexpected failure, 2 bad input, 3 censored record in
# --strict mode, 4 decoder equivalence mismatch.

import argparse
import logging
import sys
from dataclasses import replace
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from attacks import AppSatParams, appsat_campaign, appsat_sim, sat_attack_sim
from channel import BscChannel, prob_r_bit_one, prob_t_bit_one, select_g, transmit
from decoder import DecoderConfig, FaultMode, decode_minsum, decode_modified
from forge_report import forge_workbook
from gf2_qc import BitVec, QcParityMatrix, load_code, null_space_sample, syndrome
from harness import (
    ExperimentConfig,
    calibrate_ber,
    census_class,
    equivalence_check,
    flip_experiment,
    records_to_frame,
    run_sweep,
    trial_rng,
    write_csv,
    wrong_key_report,
)
from locking import (
    CENSUS_MAX_H,
    Key,
    KeyClass,
    StopCondition,
    build_scheme,
    estimate_stop_set,
    key_space_census,
    make_secret_vector,
    make_wrong_key,
    stop_set_census,
)
from settings import ConfigError, load_config, load_overrides

logger = logging.getLogger("cli")

EXIT_OK, EXIT_FAILURE, EXIT_BAD_INPUT, EXIT_CENSORED, EXIT_MISMATCH = 0, 1, 2, 3, 4


def _float_list(value: Any) -> List[float]:
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    if isinstance(value, (int, float)):
        return [float(value)]
    return [float(v) for v in str(value).split(",") if v.strip()]


def _int_list(value: Any) -> List[int]:
    return [int(v) for v in _float_list(value)]


# --- PARSER ---
def build_parser(config: Dict[str, Any]) -> argparse.ArgumentParser:
    dec, sweep, attack, bit_probs = config["decoder"], config["sweep"], config["attack"], config.get("syndrome_bits", {})
    calib = config.get("calibrate", {})

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Experiment file: JSON or key=value lines.")
    common.add_argument("--seed", type=int, default=None, help="Master seed (defaults to config sweep.seed).")
    common.add_argument("--out", help="Write the CSV here instead of stdout.")
    common.add_argument("--xlsx", help="Also forge an Excel workbook at this path.")
    common.add_argument("--strict", action="store_true", help="Exit 3 when any FER record is censored.")
    common.add_argument("--ci", action="store_true", help="CI mode: --seed becomes mandatory.")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="Debug logging.")
    verbosity.add_argument("--quiet", action="store_true", help="Warnings and errors only.")

    # Parents share Action objects with their children, so every subcommand
    # gets its own copy of the code options (their --code defaults differ).
    def code_opts(default_code: str) -> argparse.ArgumentParser:
        opts = argparse.ArgumentParser(add_help=False)
        opts.add_argument("--code", default=default_code, help="Code file path or profile name.")
        opts.add_argument("--alpha", type=float, default=dec["alpha"], help="Min-sum scaling factor.")
        opts.add_argument("--imax", type=int, default=dec["imax"], help="Maximum decoding iterations.")
        opts.add_argument("--fault", choices=[m.value for m in FaultMode], default=dec["fault"])
        opts.add_argument("--llr-magnitude", type=float, default=dec["llr_magnitude"])
        return opts

    lock_opts = argparse.ArgumentParser(add_help=False)
    lock_opts.add_argument("--scheme", default="plain", help="plain, 1 (Scheme1) or 2 (Scheme2).")
    lock_opts.add_argument("--hk", type=int, help="Scheme1 key length.")
    lock_opts.add_argument("--g", type=int, help="Scheme2 fold width.")
    lock_opts.add_argument("--lr", type=int, help="Scheme2 folded length.")
    lock_opts.add_argument("--v", default="zero", help="Secret vector: zero, hex:.., pattern:<hex>, seed:<int>.")
    lock_opts.add_argument("--key", help="Key in hex (defaults to the correct key).")

    sweep_opts = argparse.ArgumentParser(add_help=False)
    sweep_opts.add_argument("--ber-grid", default=sweep["ber_grid"], help="Comma-separated crossover probabilities.")
    sweep_opts.add_argument("--min-errors", type=int, default=sweep["min_errors"])
    sweep_opts.add_argument("--max-trials", type=int, default=sweep["max_trials"])
    sweep_opts.add_argument("--workers", type=int, default=sweep["workers"])
    sweep_opts.add_argument("--chunk-size", type=int, default=sweep["chunk_size"])
    sweep_opts.add_argument("--random-codewords", action="store_true")
    sweep_opts.add_argument("--label", default="")

    parser = argparse.ArgumentParser(prog="ldpc-lock", description="Obfuscated LDPC decoder experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def leaf(container, name: str, parents: list, handler, help_text: str) -> argparse.ArgumentParser:
        p = container.add_parser(name, parents=parents, help=help_text)
        p.set_defaults(handler=handler, leaf_parser=p)
        return p

    prob_parser = sub.add_parser("probes", help="Analytic syndrome-bit probabilities.")
    prob_sub = prob_parser.add_subparsers(dest="prob", required=True)
    p = leaf(prob_sub, "t-prob", [common], cmd_t_prob, "Pr{t_i = 1} for row weight d_c.")
    p.add_argument("--dc", type=int, default=bit_probs.get("dc", 10))
    p.add_argument("--ber", type=float, default=bit_probs.get("ber", 0.025))
    p = leaf(prob_sub, "r-prob", [common], cmd_r_prob, "Pr{r_i = 1} for fold width g.")
    p.add_argument("--g", type=int, required=True)
    p.add_argument("--q1", type=float, help="Pr{t_i = 1}; computed from --dc/--ber when omitted.")
    p.add_argument("--dc", type=int, default=bit_probs.get("dc", 10))
    p.add_argument("--ber", type=float, default=bit_probs.get("ber", 0.025))
    p = leaf(prob_sub, "select-g", [common], cmd_select_g, "Smallest g with Pr{r_i = 1} near 0.5.")
    p.add_argument("--dc", type=int, default=bit_probs.get("dc", 10))
    p.add_argument("--ber", type=float, default=bit_probs.get("ber", 0.025))
    p.add_argument("--tolerance", type=float, default=bit_probs.get("tolerance", 0.005))
    p.add_argument("--g-max", type=int, default=10_000)

    p = leaf(sub, "decode", [common, code_opts(sweep["code"]), lock_opts], cmd_decode, "Decode one noisy frame.")
    p.add_argument("--ber", type=float, default=sweep["ber_grid"][0])
    p.add_argument("--random-codewords", action="store_true")
    p.add_argument("--trace", action="store_true", help="Print the per-iteration syndrome weights.")

    leaf(sub, "sweep", [common, code_opts(sweep["code"]), lock_opts, sweep_opts], cmd_sweep, "FER / iteration sweep.")
    p = leaf(sub, "wrongkeys", [common, code_opts(sweep["code"]), lock_opts, sweep_opts], cmd_wrongkeys, "FER per key at one BER.")
    p.add_argument("--ber", type=float, help="Defaults to the first --ber-grid value.")
    p.add_argument("--keys", help="Comma-separated hex keys; generated when omitted.")
    p.add_argument("--n-low", type=int, default=1, help="Random low-corruptibility keys to add.")
    p.add_argument("--kb-distances", default="", help="kb Hamming distances of Scheme2 high keys, e.g. 3,9.")
    leaf(sub, "flip-exp", [common, code_opts(sweep["code"]), lock_opts, sweep_opts], cmd_flip_exp, "Fault-injection comparison.")

    p = leaf(sub, "equiv-check", [common, code_opts(attack["code"])], cmd_equiv_check, "Plain vs modified decoder lock-step check.")
    p.add_argument("--trials", type=int, default=1000, help="Trials per BER point.")
    p.add_argument("--ber-grid", default=[0.01, 0.05, 0.1])

    p = leaf(sub, "calibrate", [common, code_opts(calib.get("code", sweep["code"])), lock_opts, sweep_opts],
             cmd_calibrate, "Find a BER whose baseline FER falls in a window.")
    p.add_argument("--candidates", default=calib.get("candidates"), help="Comma-separated BERs, scanned in order.")
    p.add_argument("--fer-low", type=float, default=calib.get("fer_low", 1e-4))
    p.add_argument("--fer-high", type=float, default=calib.get("fer_high", 1e-3))

    p = leaf(sub, "census", [common, code_opts("census-40"), lock_opts], cmd_census, "Stop-set size and key class.")
    p.add_argument("--all", action="store_true", help="Census every key of the scheme.")
    p.add_argument("--samples", type=int, default=1_000_000, help="Monte-Carlo samples when h is too large.")

    attack_parser = sub.add_parser("attack", help="SAT / AppSAT attack simulation.")
    attack_sub = attack_parser.add_subparsers(dest="attack", required=True)
    p = leaf(attack_sub, "sat", [common, code_opts(attack["code"]), lock_opts], cmd_attack_sat, "Exact DIP loop.")
    p.add_argument("--unroll-imax", type=int, default=1)
    p = leaf(attack_sub, "appsat", [common, code_opts(attack["code"]), lock_opts], cmd_attack_appsat, "Sampling DIP loop.")
    p.add_argument("--period", type=int, default=attack["check_period"])
    p.add_argument("--samples", type=int, default=attack["samples"])
    p.add_argument("--threshold", type=float, default=attack["threshold"])
    p.add_argument("--settle", type=int, default=attack["settle_rounds"])
    p.add_argument("--max-rounds", type=int, default=attack["max_rounds"])
    p.add_argument("--runs", type=int, default=1, help="Seeded runs (seed, seed+1, ...).")
    return parser


def parse_args(argv: Optional[Sequence[str]], config: Dict[str, Any]) -> argparse.Namespace:
    parser = build_parser(config)
    args = parser.parse_args(argv)
    if args.config:
        overrides = load_overrides(args.config)
        known = {k: v for k, v in overrides.items() if k in vars(args)}
        for ignored in sorted(set(overrides) - set(known)):
            logger.warning(f"Ignoring unknown config key '{ignored}' in {args.config}")
        args.leaf_parser.set_defaults(**known)
        args = parser.parse_args(argv)
    return args


# --- BUILDERS ---
def _seed(args, config) -> int:
    return args.seed if args.seed is not None else int(config["sweep"]["seed"])


def _decoder(args) -> DecoderConfig:
    return DecoderConfig(alpha=float(args.alpha), i_max=int(args.imax), fault=FaultMode(args.fault))


def _lock(args, code: QcParityMatrix):
    v = make_secret_vector(args.v, code.n, code.q)
    lock = build_scheme(args.scheme, syndrome(code, v), hk=args.hk, g=args.g, l_r=args.lr)
    key = None
    if not lock.is_plain:
        key = Key.from_hex(str(args.key), lock.key_length) if args.key is not None else lock.correct_key()
    return lock, key, v


def _experiment(args, config, code: QcParityMatrix) -> ExperimentConfig:
    lock, key, v = _lock(args, code)
    plain = lock.is_plain and v.weight() == 0
    return ExperimentConfig(
        code=code,
        decoder=_decoder(args),
        lock=None if plain else lock,
        key=key,
        v=None if plain else v,
        ber_grid=tuple(_float_list(args.ber_grid)),
        min_frame_errors=int(args.min_errors),
        max_trials=int(args.max_trials),
        master_seed=_seed(args, config),
        workers=int(args.workers),
        chunk_size=int(args.chunk_size),
        random_codewords=bool(args.random_codewords),
        llr_magnitude=float(args.llr_magnitude),
        label=args.label,
    )


def _emit(frame: pd.DataFrame, args, title: str, run_info: Optional[Dict[str, Any]] = None) -> None:
    write_csv(frame, args.out)
    if args.xlsx:
        info = {"command": args.command, **{k: v for k, v in vars(args).items()
                                            if k not in ("handler", "leaf_parser") and v is not None}}
        info.update(run_info or {})
        forge_workbook(frame, args.xlsx, info, title)


def _strict_exit(args, frame: pd.DataFrame) -> int:
    if args.strict and "censored" in frame and frame["censored"].astype(int).any():
        logger.error("Strict mode: censored FER records present")
        return EXIT_CENSORED
    return EXIT_OK


# --- COMMANDS ---
def cmd_t_prob(args, config) -> int:
    value = prob_t_bit_one(args.dc, args.ber)
    _emit(pd.DataFrame([{"d_c": args.dc, "ber": args.ber, "prob_t_bit_one": value}]), args, "t_prob")
    return EXIT_OK


def cmd_r_prob(args, config) -> int:
    q1 = args.q1 if args.q1 is not None else prob_t_bit_one(args.dc, args.ber)
    value = prob_r_bit_one(args.g, q1)
    _emit(pd.DataFrame([{"g": args.g, "q1": q1, "prob_r_bit_one": value}]), args, "r_prob")
    return EXIT_OK


def cmd_select_g(args, config) -> int:
    g = select_g(args.dc, args.ber, args.tolerance, args.g_max)
    q1 = prob_t_bit_one(args.dc, args.ber)
    row = {"d_c": args.dc, "ber": args.ber, "tolerance": args.tolerance, "g": g, "prob_r_bit_one": prob_r_bit_one(g, q1)}
    _emit(pd.DataFrame([row]), args, "select_g")
    return EXIT_OK


def cmd_decode(args, config) -> int:
    code = load_code(args.code, config["profiles"])
    lock, key, v = _lock(args, code)
    cfg = replace(_decoder(args), trace=bool(args.trace),
                  stop=None if lock.is_plain else _stop(lock, key))
    rng = trial_rng(_seed(args, config), 0)
    codeword = null_space_sample(code, rng) if args.random_codewords else BitVec.zeros(code.n)
    received, llrs = transmit(codeword, BscChannel(args.ber, args.llr_magnitude), rng)
    if lock.is_plain and v.weight() == 0:
        result = decode_minsum(llrs, code, cfg, rng=rng)
    else:
        result = decode_modified(llrs, code, v, cfg, rng=rng)
    row = {
        "code": code.name,
        "ber": args.ber,
        "channel_errors": (received ^ codeword).weight(),
        "iterations": result.iterations,
        "converged": int(result.converged),
        "bit_errors": (result.z ^ codeword).weight(),
        "frame_error": int(result.z != codeword),
    }
    if args.trace:
        row["syndrome_weights"] = " ".join(str(t.weight()) for t in result.syndrome_trace)
    _emit(pd.DataFrame([row]), args, "decode")
    return EXIT_OK


def _stop(lock, key):
    return StopCondition(lock, key)


def cmd_sweep(args, config) -> int:
    cfg = _experiment(args, config, load_code(args.code, config["profiles"]))
    frame = records_to_frame([(cfg, record) for record in run_sweep(cfg)])
    _emit(frame, args, "FER_Sweep")
    return _strict_exit(args, frame)


def cmd_flip_exp(args, config) -> int:
    cfg = _experiment(args, config, load_code(args.code, config["profiles"]))
    frame = records_to_frame(flip_experiment(cfg))
    _emit(frame, args, "Flip_Experiment")
    return _strict_exit(args, frame)


def cmd_wrongkeys(args, config) -> int:
    cfg = _experiment(args, config, load_code(args.code, config["profiles"]))
    if not cfg.locked:
        raise ConfigError("wrongkeys needs --scheme 1 or 2")
    if args.keys:
        raw = args.keys if isinstance(args.keys, list) else str(args.keys).split(",")
        keys = [Key.from_hex(str(k).strip(), cfg.lock.key_length) for k in raw if str(k).strip()]
    else:
        rng = np.random.default_rng(cfg.master_seed)
        keys = [cfg.lock.correct_key()]
        keys += [make_wrong_key(cfg.lock, KeyClass.LOW, rng) for _ in range(args.n_low)]
        for distance in _int_list(args.kb_distances) if args.kb_distances else []:
            keys.append(make_wrong_key(cfg.lock, KeyClass.HIGH, rng, kb_distance=distance))
    frame = wrong_key_report(cfg, keys, args.ber, baseline=True)
    _emit(frame, args, "Wrong_Keys")
    return _strict_exit(args, frame)


def cmd_equiv_check(args, config) -> int:
    code = load_code(args.code, config["profiles"])
    summary = equivalence_check(code, _decoder(args), int(args.trials), _float_list(args.ber_grid), _seed(args, config))
    _emit(summary.to_frame(), args, "Equivalence")
    if not summary.passed:
        logger.error(f"Decoder outputs diverged: {summary.mismatches} mismatches, first {summary.first_mismatch}")
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_calibrate(args, config) -> int:
    if not args.candidates:
        raise ValueError("calibrate needs --candidates or a calibrate.candidates list in the config")
    cfg = _experiment(args, config, load_code(args.code, config["profiles"]))
    found = calibrate_ber(cfg, _float_list(args.candidates), (args.fer_low, args.fer_high))
    if found is None:
        logger.error("Calibration failed: widen --candidates or raise --max-trials")
        return EXIT_CENSORED if args.strict else EXIT_OK
    frame = records_to_frame([(cfg, found[1])])
    _emit(frame, args, "Calibration")
    return EXIT_OK


def cmd_census(args, config) -> int:
    code = load_code(args.code, config["profiles"])
    lock, key, _ = _lock(args, code)
    if lock.is_plain:
        raise ConfigError("census needs --scheme 1 or 2")
    if args.all:
        table = key_space_census(lock)
        frame = pd.DataFrame({
            "key": [format(int(k), "x") for k in table["keys"]],
            "class": table["classes"],
            "stop_set_size": table["sizes"],
        })
    elif lock.h <= CENSUS_MAX_H:
        result = stop_set_census(lock, key)
        frame = pd.DataFrame([{"key": key.to_hex(), "class": result.key_class.value, "stop_set_size": result.size}])
    else:
        est = estimate_stop_set(lock, key, args.samples, np.random.default_rng(_seed(args, config)))
        frame = pd.DataFrame([{
            "key": key.to_hex(), "class": census_class(lock, key), "stop_set_size": est.size,
            "ci95_low": est.ci_low, "ci95_high": est.ci_high, "samples": est.samples,
        }])
    _emit(frame, args, "Census", {"scheme": lock.describe(), "h": lock.h})
    return EXIT_OK


def cmd_attack_sat(args, config) -> int:
    code = load_code(args.code, config["profiles"])
    lock, _, _ = _lock(args, code)
    result = sat_attack_sim(lock, lock.correct_key(), args.unroll_imax, np.random.default_rng(_seed(args, config)))
    _emit(pd.DataFrame([{"scheme": lock.describe(), **result.to_row()}]), args, "SAT_Attack")
    return EXIT_OK


def cmd_attack_appsat(args, config) -> int:
    code = load_code(args.code, config["profiles"])
    lock, _, _ = _lock(args, code)
    params = AppSatParams(args.period, args.samples, args.threshold, args.settle, args.max_rounds)
    seed = _seed(args, config)
    if args.runs > 1:
        frame = appsat_campaign(lock, lock.correct_key(), params, range(seed, seed + args.runs))
        high = (frame["returned_key_class"] == KeyClass.HIGH.value).mean()
        logger.info(f"AppSAT campaign: {high:.1%} of {args.runs} runs returned a high-corruptibility key")
    else:
        result = appsat_sim(lock, lock.correct_key(), params, np.random.default_rng(seed))
        frame = pd.DataFrame([{"seed": seed, **result.to_row()}])
    frame.insert(0, "scheme", lock.describe())
    _emit(frame, args, "AppSAT_Attack")
    return EXIT_OK


# --- MAIN ---
def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config = load_config()
        args = parse_args(argv, config)
    except (FileNotFoundError, ValueError) as e:
        logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(levelname)s - %(message)s")
        logger.error(f"Configuration error: {e}")
        return EXIT_BAD_INPUT

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s - %(levelname)s - %(message)s")

    if args.ci and args.seed is None:
        logger.error("CI mode requires an explicit --seed")
        return EXIT_BAD_INPUT

    try:
        return args.handler(args, config)
    except (FileNotFoundError, PermissionError, ValueError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_BAD_INPUT
    except Exception:
        logger.exception("Unexpected failure")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
