"""Command-line interface: ``cfti <subcommand> [options]``.

Every option can also be given in a ``key = value`` file passed with
``--config``; explicit command-line flags take precedence.
"""

import argparse
import csv
import sys

import numpy as np

from . import coherence as coh
from .experiments import (
    DedupPipelineSpec,
    ExposureSweepSpec,
    PhaseTransitionSpec,
    SyntheticVolumeSpec,
    gen_sparse_phantom,
    gen_synthetic_bio,
    optimal_pmf,
    run_dedup_pipeline,
    run_exposure_sweep,
    run_phase_transition,
    write_report,
)
from .io import read_config, read_measurements, read_volume, write_measurements, write_volume
from .noise import epsilon_empirical, epsilon_uds, epsilon_vds, rho_for_pmf
from .recon import ConvergenceError, CSReconstructor, ReconConfig, minimal_energy
from .sampling import build_pmf_ci, build_pmf_si, draw_plan
from .sensing import ci_forward, dedup_ci_forward, nyquist_forward, si_forward
from .transforms import CenteredDFT, Haar1D

__all__ = ["main", "build_parser"]


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _alphas(text):
    return [v.strip() if v.strip() == "opt" else float(v) for v in str(text).split(",")
            if v.strip()]


def _ints(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def _scheme(text):
    value = str(text).upper()
    if value not in ("CI", "SI"):
        raise argparse.ArgumentTypeError(f"scheme must be ci or si, got {text!r}")
    return value


def _arm(text):
    value = str(text).lower()
    table = {"yes": True, "true": True, "1": True, "no": False, "false": False, "0": False,
             "both": "both"}
    if value not in table:
        raise argparse.ArgumentTypeError("constrained must be yes, no or both")
    return table[value]


def _truthy(text):
    return str(text).strip().lower() in ("1", "true", "yes", "on")


def _common():
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--seed", type=int, default=0, help="base random seed")
    parent.add_argument("--threads", type=int, default=1, help="worker processes for trials")
    parent.add_argument("--out", default="-", help="output path ('-' for stdout)")
    parent.add_argument("--config", help="key=value file supplying defaults for any flag")
    return parent


def _add_volume_args(p):
    p.add_argument("--n-xi", type=int, default=512)
    p.add_argument("--side", type=int, default=16)
    p.add_argument("--flat", type=float, default=None,
                   help="half-length of spectral plateaus (default scales with n_xi)")


def _add_solver_args(p, tol, max_iter):
    p.add_argument("--tol", type=float, default=tol)
    p.add_argument("--max-iter", type=int, default=max_iter)


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="cfti", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-volume", parents=[common], help="write an HSV1 ground-truth volume")
    p.add_argument("--kind", choices=["bio", "phantom"], default="bio")
    _add_volume_args(p)
    p.add_argument("--k-xi", type=int, default=4)
    p.add_argument("--k-p", type=int, default=4)
    p.add_argument("--prior", choices=["1d", "3d"], default="3d")
    p.add_argument("--abundances", help=".npy array (n_end, side, side) of abundance maps")
    p.add_argument("--asymmetric", action="store_true", help="skip spectral mirroring")

    p = sub.add_parser("pmf", parents=[common], help="print a sampling pmf as CSV")
    p.add_argument("--scheme", type=_scheme, default="CI")
    p.add_argument("--n-xi", type=int, default=512)
    p.add_argument("--n-p", type=int, default=64)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--optimal", action="store_true", help="use the coherence-optimal pmf")

    p = sub.add_parser("coherence", parents=[common], help="print coherence bounds as CSV")
    p.add_argument("--scheme", type=_scheme, default="CI")
    p.add_argument("--n-xi", type=int, default=512)
    p.add_argument("--n-p", type=int, default=64)

    p = sub.add_parser("noise-bound", parents=[common], help="analytic and empirical radii")
    p.add_argument("--scheme", type=_scheme, default="CI")
    p.add_argument("--n-xi", type=int, default=512)
    p.add_argument("--n-p", type=int, default=64)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--m", type=_ints, default=[64, 128, 256, 512])
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--s", type=float, default=None, help="tail parameter (6 UDS, 8.2 VDS)")

    p = sub.add_parser("simulate", parents=[common], help="acquire FTIM measurements")
    p.add_argument("--vol", required=True, help="HSV1 ground truth")
    p.add_argument("--scheme", type=_scheme, default="CI")
    p.add_argument("--m", type=int, required=True, help="number of draws")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--optimal", action="store_true")
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--constrained", action="store_true")
    p.add_argument("--zeta", type=float, default=0.01)
    p.add_argument("--dedup", action="store_true", help="CI only: keep distinct rows")

    p = sub.add_parser("reconstruct", parents=[common], help="recover an HSV1 volume")
    p.add_argument("--meas", required=True)
    p.add_argument("--method", choices=["cs", "me"], default="cs")
    p.add_argument("--prior", choices=["1d", "3d"], default="1d")
    p.add_argument("--epsilon", default="auto")
    p.add_argument("--real", action="store_true")
    p.add_argument("--nonnegative", action="store_true")
    _add_solver_args(p, 1e-6, 10_000)

    p = sub.add_parser("phase-transition", parents=[common], help="noiseless recovery sweep")
    p.add_argument("--scheme", type=_scheme, default="SI")
    p.add_argument("--n-xi", type=int, default=512)
    p.add_argument("--n-p", type=int, default=64)
    p.add_argument("--k-xi", type=int, default=4)
    p.add_argument("--k-p", type=int, default=4)
    p.add_argument("--alphas", type=_alphas, default=[0, 1, 1.5, 2, 8, "opt"])
    p.add_argument("--ratios", type=_floats,
                   default=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--threshold", type=float, default=1e-10)
    _add_solver_args(p, 1e-8, 10_000)
    p.add_argument("--timing", action="store_true", help="keep wall-clock times in the CSV")

    p = sub.add_parser("exposure-sweep", parents=[common], help="CS/ME RSNR versus ratio")
    p.add_argument("--scheme", type=_scheme, default="CI")
    _add_volume_args(p)
    p.add_argument("--ratios", type=_floats, default=[0.1, 0.2, 0.4, 0.6, 0.8, 1.0])
    p.add_argument("--constrained", type=_arm, default="both")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--snr-db", type=float, default=20.0)
    p.add_argument("--prior", choices=["1d", "3d"], default=None)
    _add_solver_args(p, 1e-4, 3000)
    p.add_argument("--timing", action="store_true")

    p = sub.add_parser("dedup-pipeline", parents=[common], help="intensity versus frames")
    _add_volume_args(p)
    p.add_argument("--vol", help="HSV1 ground truth replacing the synthetic stand-in")
    p.add_argument("--i-ref", type=float, default=100.0)
    p.add_argument("--intensities", type=_floats, default=[100, 200, 300, 400, 500, 600, 700])
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--ref-snr-db", type=float, default=20.0)
    _add_solver_args(p, 1e-4, 3000)
    p.add_argument("--timing", action="store_true")
    return parser


def _apply_config(parser, argv):
    """Re-parse ``argv`` with defaults taken from the ``--config`` file."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    values = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    defaults = {}
    for action in sub._actions:
        if action.dest not in values:
            continue
        raw = values.pop(action.dest)
        if isinstance(action, argparse._StoreTrueAction):
            defaults[action.dest] = _truthy(raw)
        else:
            defaults[action.dest] = action.type(raw) if action.type else raw
    values.pop("config", None)
    if values:
        parser.error(f"unknown config keys for {args.command}: {sorted(values)}")
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _text_out(path):
    return sys.stdout if path == "-" else open(path, "w", newline="")


def _write_rows(path, header, rows):
    fh = _text_out(path)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _fmt(x):
    return "" if x is None else repr(float(x))


def _need_file(args, what):
    if args.out == "-":
        raise SystemExit(f"cfti {args.command}: --out must name a {what} file")


def _pmf(scheme, n_xi, n_p, alpha, optimal):
    if optimal:
        return optimal_pmf(scheme, n_xi, n_p)
    if scheme == "CI":
        return build_pmf_ci(n_xi, alpha)
    return build_pmf_si(n_xi, n_p, alpha)


def _volume_spec(args):
    return SyntheticVolumeSpec(n_xi=args.n_xi, side=args.side, flat=args.flat)


def cmd_gen_volume(args):
    _need_file(args, "HSV1")
    if args.kind == "phantom":
        vol, _ = gen_sparse_phantom(args.n_xi, args.side ** 2, args.k_xi, args.k_p, args.prior,
                                    args.seed)
    else:
        spec = _volume_spec(args)
        spec.symmetric = not args.asymmetric
        if args.abundances:
            spec.abundances = np.load(args.abundances)
            spec.peaks = spec.peaks[:spec.abundances.shape[0]]
            spec.__post_init__()
        vol = gen_synthetic_bio(spec, args.seed)
    write_volume(args.out, vol)


def cmd_pmf(args):
    pmf = _pmf(args.scheme, args.n_xi, args.n_p, args.alpha, args.optimal)
    _write_rows(args.out, ["index", "probability"],
                [[i, _fmt(p)] for i, p in enumerate(pmf.probs)])


def cmd_coherence(args):
    if args.scheme == "CI":
        kappa = coh.kappa_ci(args.n_xi)
    else:
        kappa = coh.kappa_si(args.n_xi, args.n_p)
    exact = None
    if args.n_xi <= coh.MAX_EXACT_DIM:
        mu = coh.local_coherence_exact(CenteredDFT(args.n_xi), Haar1D(args.n_xi))
        if args.scheme == "SI":
            mu_pix = np.full(args.n_p, 0.5 if args.n_p > 1 else 1.0)
            mu = coh.local_coherence_kron(mu_pix, mu)
        exact = mu
    rows = [[i, _fmt(k), "" if exact is None else _fmt(exact[i]), _fmt(kappa.kappa_sq_norm)]
            for i, k in enumerate(kappa.kappa)]
    _write_rows(args.out, ["index", "kappa", "exact_mu", "kappa_sq_norm"], rows)


def cmd_noise_bound(args):
    pmf = build_pmf_ci(args.n_xi, args.alpha) if args.scheme == "CI" else build_pmf_si(
        args.n_xi, args.n_p, args.alpha)
    n = pmf.n
    emp = epsilon_empirical(pmf, args.m, args.sigma, args.trials, seed=args.seed)
    rows = []
    for m, e in zip(args.m, emp):
        if args.alpha == 0:
            analytic = epsilon_uds(args.sigma, n, m, 6.0 if args.s is None else args.s)
        else:
            analytic = epsilon_vds(args.sigma, n, m, 8.2 if args.s is None else args.s,
                                   rho_for_pmf(pmf))
        rows.append([m, _fmt(analytic), _fmt(e)])
    _write_rows(args.out, ["M", "epsilon_analytic", "epsilon_empirical"], rows)


def cmd_simulate(args):
    _need_file(args, "FTIM")
    vol = read_volume(args.vol)
    pmf = _pmf(args.scheme, vol.n_xi, vol.n_p, args.alpha, args.optimal)
    plan = draw_plan(pmf, args.m, args.seed)
    noise_seed = args.seed + 1
    if args.dedup:
        if args.scheme != "CI" or args.constrained:
            raise SystemExit("cfti simulate: --dedup applies to unconstrained CI only")
        y = nyquist_forward(vol, args.sigma, noise_seed)
        meas = dedup_ci_forward(y, plan, args.sigma)
    elif args.scheme == "CI":
        meas = ci_forward(vol, plan, args.sigma, noise_seed, args.constrained)
    else:
        meas = si_forward(vol, plan, args.sigma, noise_seed, args.constrained, args.zeta)
    write_measurements(args.out, meas)


def cmd_reconstruct(args):
    _need_file(args, "HSV1")
    meas = read_measurements(args.meas)
    if args.method == "me":
        vol = minimal_energy(meas)
    else:
        eps = args.epsilon if args.epsilon == "auto" else float(args.epsilon)
        est = CSReconstructor(epsilon=eps, prior=args.prior, tol=args.tol,
                              max_iter=args.max_iter, real=args.real,
                              nonnegative=args.nonnegative, random_state=args.seed)
        vol = est.fit(meas).volume_
    write_volume(args.out, vol)


def _emit_report(args, report):
    report.sort()
    if args.out == "-":
        sys.stdout.write(report.to_csv(args.timing))
    else:
        write_report(report, args.out, args.timing)


def cmd_phase_transition(args):
    spec = PhaseTransitionSpec(scheme=args.scheme, n_xi=args.n_xi, n_p=args.n_p,
                               k_xi=args.k_xi, k_p=args.k_p, alphas=args.alphas,
                               ratios=args.ratios, trials=args.trials, seed=args.seed,
                               threshold=args.threshold, tol=args.tol,
                               max_iter=args.max_iter, threads=args.threads)
    _emit_report(args, run_phase_transition(spec))


def cmd_exposure_sweep(args):
    prior = args.prior or ("1d" if args.scheme == "CI" else "3d")
    config = ReconConfig(prior=prior, tol=args.tol, max_iter=args.max_iter, real=True,
                         raise_on_failure=False)
    spec = ExposureSweepSpec(scheme=args.scheme, volume=_volume_spec(args), ratios=args.ratios,
                             constrained=args.constrained, alpha=args.alpha,
                             trials=args.trials, seed=args.seed, snr_db=args.snr_db,
                             config=config, threads=args.threads)
    _emit_report(args, run_exposure_sweep(spec))


def cmd_dedup_pipeline(args):
    config = ReconConfig(prior="1d", tol=args.tol, max_iter=args.max_iter, real=True,
                         raise_on_failure=False)
    spec = DedupPipelineSpec(volume=_volume_spec(args), i_ref=args.i_ref,
                             intensities=args.intensities, alpha=args.alpha,
                             trials=args.trials, seed=args.seed, ref_snr_db=args.ref_snr_db,
                             config=config, threads=args.threads)
    truth = read_volume(args.vol) if args.vol else None
    _emit_report(args, run_dedup_pipeline(spec, truth))


_COMMANDS = {
    "gen-volume": cmd_gen_volume,
    "pmf": cmd_pmf,
    "coherence": cmd_coherence,
    "noise-bound": cmd_noise_bound,
    "simulate": cmd_simulate,
    "reconstruct": cmd_reconstruct,
    "phase-transition": cmd_phase_transition,
    "exposure-sweep": cmd_exposure_sweep,
    "dedup-pipeline": cmd_dedup_pipeline,
}


def main(argv=None):
    parser = build_parser()
    args = _apply_config(parser, argv)
    try:
        _COMMANDS[args.command](args)
    except ConvergenceError as exc:
        print(f"cfti {args.command}: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"cfti {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
