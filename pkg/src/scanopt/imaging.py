"""Synthetic imaging: scenes, shifted low-res capture, super-resolution.

The camera model is a periodic (wrap-around) scene translated by a
sub-pixel offset and then subsampled by an integer factor q, so integer
offsets interleave exactly and Fourier shifts are exact. Reconstruction
recovers the fine grid either by direct interleaving (exact shift sets)
or by regularized least squares (arbitrary shifts). A separate 1-D
band-separation path recovers scene content beyond the capture passband
from three phase-shifted modulated exposures.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigurationError,
    InterleaveContractError,
    NoResolvableFrequencyError,
    SingularMixingError,
)

# Bar-target frequency ladder, cycles per fine-grid pixel. The top rung is
# the fine-grid Nyquist rate; a single q = 2 capture cannot represent
# anything above 1/4.
BAR_FREQUENCIES = (1 / 32, 1 / 16, 1 / 8, 1 / 4, 3 / 8, 1 / 2)

_INTEGER_SNAP = 1e-9


@dataclass(frozen=True)
class Raster:
    """Row-major intensity grid; scenes are normalized to [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        a = np.array(self.data, dtype=float)
        if a.ndim != 2 or a.size == 0:
            raise ConfigurationError("raster data must be a non-empty 2-D array")
        if not np.all(np.isfinite(a)):
            raise ConfigurationError("raster data must be finite")
        a.flags.writeable = False
        object.__setattr__(self, "data", a)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class CaptureSet:
    """K low-res frames with their commanded/achieved fine-pixel shifts."""

    frames: tuple
    shifts: tuple
    q: int
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if len(self.frames) != len(self.shifts) or not self.frames:
            raise ConfigurationError("capture set needs matching, non-empty frames and shifts")
        h, w = self.frames[0].data.shape
        if any(f.data.shape != (h, w) for f in self.frames):
            raise ConfigurationError("all frames in a capture set must share dimensions")
        if self.q < 1 or int(self.q) != self.q:
            raise ConfigurationError("q must be a positive integer")
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(
            self, "shifts", tuple((float(dx), float(dy)) for dx, dy in self.shifts)
        )
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be >= 0")


@dataclass(frozen=True)
class BarTargetSpec:
    """Which frequencies the bar target carries and when a block counts
    as resolved."""

    frequencies: tuple = BAR_FREQUENCIES
    contrast_threshold: float = 0.2
    interior_margin: int = 2


@dataclass(frozen=True)
class ImprovementReport:
    single_frame_cutoff: float
    recon_cutoff: float
    factor: float
    rmse_single: float
    rmse_recon: float


def _bar_blocks(size: int, count: int):
    """Row ranges of the stacked frequency blocks, top to bottom."""
    return [(b[0], b[-1] + 1) for b in np.array_split(np.arange(size), count)]


def synth_scene(kind: str, size: int, seed: int = 0) -> Raster:
    """Deterministic test scene.

    Parameters
    ----------
    kind : {"bars", "terrain"}
        "bars" stacks horizontal blocks of vertical sinusoidal bars, one
        block per ladder frequency, full contrast. "terrain" sums
        crater-like radial bumps with band-limited noise on a periodic
        domain.
    size : int
        Edge length in pixels; must be a power of two, at least 32.
    seed : int
        Random seed for "terrain"; "bars" is seed-independent.
    """
    if size < 32 or (size & (size - 1)) != 0:
        raise ConfigurationError("scene size must be a power of two, >= 32")
    if kind == "bars":
        img = np.empty((size, size))
        x = np.arange(size)
        for (r0, r1), f in zip(_bar_blocks(size, len(BAR_FREQUENCIES)), BAR_FREQUENCIES):
            img[r0:r1, :] = 0.5 + 0.5 * np.cos(2.0 * np.pi * f * x)
        return Raster(img)
    if kind == "terrain":
        rng = np.random.default_rng(seed)
        yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
        img = np.zeros((size, size))
        for _ in range(max(6, size // 16)):
            cx, cy = rng.uniform(0, size, 2)
            radius = rng.uniform(size / 32, size / 8)
            depth = rng.uniform(0.3, 1.0)
            # periodic (minimum-image) distance keeps the domain seamless
            dx = (xx - cx + size / 2) % size - size / 2
            dy = (yy - cy + size / 2) % size - size / 2
            d2 = (dx * dx + dy * dy) / radius**2
            img += -depth * np.exp(-d2) + 0.35 * depth * np.exp(-4.0 * (np.sqrt(d2) - 1.0) ** 2)
        spectrum = np.fft.fft2(rng.standard_normal((size, size)))
        fy = np.fft.fftfreq(size)[:, None]
        fx = np.fft.fftfreq(size)[None, :]
        spectrum[np.sqrt(fx * fx + fy * fy) > 0.08] = 0.0
        noise = np.fft.ifft2(spectrum).real
        img += 0.15 * noise / max(np.max(np.abs(noise)), 1e-12)
        lo, hi = img.min(), img.max()
        return Raster((img - lo) / max(hi - lo, 1e-12))
    raise ConfigurationError(f"unknown scene kind: {kind!r}")


def translate(img: np.ndarray, dx: float, dy: float, force_fourier: bool = False) -> np.ndarray:
    """Periodic translation: out[y, x] = img[(y + dy) mod H, (x + dx) mod W].

    Integer offsets reduce to an exact circular roll. Fractional offsets
    use the Fourier shift theorem; taking the real part afterwards makes
    the map a real linear operator whose transpose is the translation by
    the opposite offset (the Nyquist bin symmetrizes automatically), which
    ls_recon relies on.
    """
    img = np.asarray(img, dtype=float)
    ix, iy = round(dx), round(dy)
    if not force_fourier and abs(dx - ix) <= _INTEGER_SNAP and abs(dy - iy) <= _INTEGER_SNAP:
        return np.roll(img, (-iy, -ix), axis=(0, 1))
    h, w = img.shape
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    phase = np.exp(2j * np.pi * (fy * dy + fx * dx))
    return np.fft.ifft2(np.fft.fft2(img) * phase).real


def capture(scene: Raster, shift, q: int, noise_sigma: float = 0.0, seed: int = 0) -> Raster:
    """One low-resolution exposure of the scene.

    Parameters
    ----------
    scene : Raster
        Fine-grid scene, dimensions divisible by q.
    shift : (dx, dy)
        Camera offset in fine-grid pixels; the optical image is the scene
        translated by this amount (periodic boundary).
    q : int
        Subsampling factor: output pixel (i, j) takes the translated scene
        sample at (q i, q j), so the K = q^2 integer offsets tile the fine
        grid exactly.
    noise_sigma : float
        Std of additive Gaussian noise applied after subsampling.
    seed : int
        Noise seed; ignored when noise_sigma is 0.

    Returns
    -------
    Raster of dimensions scene / q.
    """
    q = int(q)
    if q < 1:
        raise ConfigurationError("q must be a positive integer")
    h, w = scene.data.shape
    if h % q or w % q:
        raise ConfigurationError(f"q = {q} must divide scene dimensions {w} x {h}")
    dx, dy = float(shift[0]), float(shift[1])
    frame = translate(scene.data, dx, dy)[::q, ::q]
    if noise_sigma > 0:
        frame = frame + np.random.default_rng(seed).normal(0.0, noise_sigma, frame.shape)
    return Raster(frame)


def _frame_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def make_capture_set(scene: Raster, shifts, q: int, noise_sigma: float = 0.0, seed: int = 0) -> CaptureSet:
    """Capture one frame per shift; per-frame noise seeds derive from
    (seed, frame index) so frames are reproducible independently."""
    frames = tuple(
        capture(scene, s, q, noise_sigma, _frame_seed(seed, k)) for k, s in enumerate(shifts)
    )
    return CaptureSet(frames, tuple(shifts), q, noise_sigma, seed)


def _exact_interleave(cs: CaptureSet):
    """Integer (dx, dy) per frame if the shifts tile {0..q-1}^2, else None."""
    offsets = []
    for dx, dy in cs.shifts:
        ix, iy = round(dx), round(dy)
        if abs(dx - ix) > _INTEGER_SNAP or abs(dy - iy) > _INTEGER_SNAP:
            return None
        offsets.append((ix % cs.q, iy % cs.q))
    want = {(a, b) for a in range(cs.q) for b in range(cs.q)}
    if len(cs.frames) != cs.q**2 or set(offsets) != want:
        return None
    return offsets


def shift_add_recon(cs: CaptureSet) -> Raster:
    """Interleave q^2 integer-shifted frames onto the fine grid.

    Frame pixel (i, j) captured at offset (dx, dy) came from fine-grid
    site (q i + dy, q j + dx), so each frame fills one coset of the fine
    grid. Requires the shift set to be exactly the q^2 distinct integer
    offsets; anything else raises, pointing the caller at ls_recon.
    """
    offsets = _exact_interleave(cs)
    if offsets is None:
        raise InterleaveContractError(
            "shifts do not form the exact q x q integer interleave; use ls_recon"
        )
    h, w = cs.frames[0].data.shape
    fine = np.empty((h * cs.q, w * cs.q))
    for frame, (dx, dy) in zip(cs.frames, offsets):
        fine[dy :: cs.q, dx :: cs.q] = frame.data
    return Raster(fine)


def _downsample(x: np.ndarray, q: int) -> np.ndarray:
    return x[::q, ::q]


def _upsample_zero(y: np.ndarray, q: int) -> np.ndarray:
    z = np.zeros((y.shape[0] * q, y.shape[1] * q))
    z[::q, ::q] = y
    return z


def _laplacian(x: np.ndarray) -> np.ndarray:
    # gradient^T gradient with periodic forward differences
    return 4.0 * x - (
        np.roll(x, 1, 0) + np.roll(x, -1, 0) + np.roll(x, 1, 1) + np.roll(x, -1, 1)
    )


def ls_recon(cs: CaptureSet, lam: float = 0.0, max_cg_iters: int = 200, residuals=None) -> Raster:
    """Least-squares super-resolution for arbitrary sub-pixel shifts.

    Minimizes

        sum_k || frame_k - D_q T_{s_k} x ||^2 + lam ||grad x||^2

    by conjugate gradient on the normal equations, where T is periodic
    translation and D_q subsampling. The adjoint of D_q T_s is T_{-s}
    followed by zero insertion, exact for both the integer and Fourier
    translation paths. Plain CG residual 2-norms oscillate, so the
    iterates are passed through minimal-residual smoothing; the returned
    solution is the smoothed one and its recorded residual norms never
    increase.

    Parameters
    ----------
    cs : CaptureSet
    lam : float
        Gradient penalty weight; required > 0 when the shift set leaves
        fine-grid sites unobserved (e.g. repeated shifts).
    max_cg_iters : int
        Iteration cap; CG also stops at relative residual 1e-8.
    residuals : list or None
        When a list is passed, the residual norm after each iteration is
        appended to it.

    Returns
    -------
    Raster on the fine grid (q times the frame dimensions).
    """
    if lam < 0:
        raise ConfigurationError("lam must be >= 0")
    q = cs.q

    def normal_op(x):
        acc = lam * _laplacian(x) if lam > 0 else np.zeros_like(x)
        for dx, dy in cs.shifts:
            acc += translate(_upsample_zero(_downsample(translate(x, dx, dy), q), q), -dx, -dy)
        return acc

    b = np.zeros((cs.frames[0].data.shape[0] * q, cs.frames[0].data.shape[1] * q))
    for frame, (dx, dy) in zip(cs.frames, cs.shifts):
        b += translate(_upsample_zero(frame.data, q), -dx, -dy)

    norm_b = np.linalg.norm(b)
    x = np.zeros_like(b)
    if norm_b == 0.0:
        return Raster(x)
    r = b.copy()
    p = r.copy()
    rs = float(np.sum(r * r))
    x_s = x.copy()
    r_s = r.copy()
    for _ in range(max_cg_iters):
        Ap = normal_op(p)
        alpha = rs / float(np.sum(p * Ap))
        x += alpha * p
        r -= alpha * Ap
        # minimal-residual smoothing: step from the smoothed iterate
        # toward the CG iterate by the residual-minimizing fraction,
        # clipped so the quadratic objective does not increase either
        # (M (x - x_s) = r_s - r, so no extra operator application)
        d_x = x - x_s
        d_r = r - r_s
        denom = float(np.sum(d_r * d_r))
        if denom > 0.0:
            eta = -float(np.sum(r_s * d_r)) / denom
            g0 = float(np.sum(d_x * r_s))
            c2 = -float(np.sum(d_x * d_r))
            if c2 > 0.0:
                lo, hi = (0.0, 2.0 * g0 / c2) if g0 >= 0.0 else (2.0 * g0 / c2, 0.0)
                eta = min(max(eta, lo), hi)
            elif (eta >= 0.0) != (g0 >= 0.0):
                eta = 0.0
            x_s += eta * d_x
            r_s += eta * d_r
        if residuals is not None:
            residuals.append(float(np.linalg.norm(r_s)))
        if np.linalg.norm(r_s) / norm_b < 1e-8:
            break
        rs_new = float(np.sum(r * r))
        p = r + (rs_new / rs) * p
        rs = rs_new
    return Raster(x_s)


def upsample_replicate(frame: Raster, q: int) -> Raster:
    """Pixel-replicate a low-res frame onto the fine grid (the honest
    'what a single capture can show' rendering)."""
    return Raster(np.repeat(np.repeat(frame.data, q, axis=0), q, axis=1))


def sim_demodulate_1d(y0, y1, y2, f0: float, phases, m: float, fc: float) -> np.ndarray:
    """Separate and reassemble the bands of three modulated exposures.

    Each input is an ideal-low-pass capture (cutoff fc) of
    s(x) (1 + m cos(2 pi f0 x + phase_p)), so its spectrum inside the
    passband mixes S(f), S(f - f0) and S(f + f0) with known coefficients.
    Solving the 3 x 3 mixing system per frequency bin and shifting the
    side bands back to their true locations extends the support to
    fc + f0.

    Parameters
    ----------
    y0, y1, y2 : length-M arrays
        The three exposures.
    f0 : float
        Modulation frequency, cycles per sample; must sit on the DFT grid
        of M and satisfy f0 <= fc.
    phases : three floats
        Pattern phases, pairwise distinct modulo 2 pi.
    m : float
        Modulation depth, > 0.

    Returns
    -------
    Length-M real array: the demodulated signal with support up to
    fc + f0.

    Raises
    ------
    SingularMixingError
        If m = 0 or two phases coincide (the mixing matrix loses rank).
    """
    y = [np.asarray(v, dtype=float).ravel() for v in (y0, y1, y2)]
    M = y[0].size
    if any(v.size != M for v in y):
        raise ConfigurationError("the three exposures must share one length")
    phases = [float(p) for p in phases]
    if len(phases) != 3:
        raise ConfigurationError("exactly three pattern phases are required")
    if not (0.0 < fc <= 0.5):
        raise ConfigurationError("fc must lie in (0, 0.5]")
    if not (0.0 < f0 <= fc):
        raise ConfigurationError("f0 must lie in (0, fc]")
    if abs(m) < 1e-12:
        raise SingularMixingError("modulation depth m = 0 leaves the side bands unobservable")
    rot = [np.exp(1j * p) for p in phases]
    for i in range(3):
        for j in range(i + 1, 3):
            if abs(rot[i] - rot[j]) < 1e-9:
                raise SingularMixingError(
                    f"pattern phases {i} and {j} coincide modulo 2 pi"
                )
    k0 = f0 * M
    if abs(k0 - round(k0)) > 1e-9:
        raise ConfigurationError("f0 must align with a DFT bin (f0 * M integral)")
    k0 = int(round(k0))

    # rows: Y_p(f) = S(f) + (m/2) e^{+i phase} S(f - f0) + (m/2) e^{-i phase} S(f + f0)
    mix = np.array([[1.0, 0.5 * m * r, 0.5 * m * np.conj(r)] for r in rot])
    unmix = np.linalg.inv(mix)

    band = np.abs(np.fft.fftfreq(M)) <= fc + 1e-12
    Y = np.stack([np.fft.fft(v)[band] for v in y])
    S = unmix @ Y  # rows: center, S(f - f0), S(f + f0) on the passband bins

    full = np.zeros((3, M), dtype=complex)
    for row in range(3):
        full[row, band] = S[row]
    acc = full[0].copy()
    weight = band.astype(float).copy()
    # S(f - f0) estimates the spectrum k0 bins below each passband bin
    acc += np.roll(full[1], -k0)
    weight += np.roll(band, -k0)
    acc += np.roll(full[2], k0)
    weight += np.roll(band, k0)
    spectrum = np.where(weight > 0, acc / np.maximum(weight, 1.0), 0.0)
    return np.fft.ifft(spectrum).real


def _block_contrast(block: np.ndarray) -> float:
    hi, lo = float(np.max(block)), float(np.min(block))
    if hi + lo == 0.0:
        return 0.0
    return (hi - lo) / (hi + lo)


def _dominant_bin(block: np.ndarray) -> int:
    profile = block.mean(axis=0)
    spectrum = np.abs(np.fft.rfft(profile - profile.mean()))
    if spectrum.size <= 1 or np.max(spectrum) == 0.0:
        return -1
    return int(np.argmax(spectrum[1:]) + 1)


def _bar_cutoff(img: np.ndarray, spec: BarTargetSpec) -> float:
    """Highest ladder frequency whose block shows threshold contrast at
    the nominal frequency (an aliased copy at the wrong frequency does
    not count as resolved)."""
    size = img.shape[0]
    cutoff = 0.0
    for (r0, r1), f in zip(_bar_blocks(size, len(spec.frequencies)), spec.frequencies):
        r0m, r1m = r0 + spec.interior_margin, r1 - spec.interior_margin
        if r1m <= r0m:
            raise ConfigurationError("bar blocks too thin for the interior margin")
        block = img[r0m:r1m, :]
        if _block_contrast(block) < spec.contrast_threshold:
            continue
        if _dominant_bin(block) != round(f * img.shape[1]):
            continue
        cutoff = max(cutoff, f)
    if cutoff == 0.0:
        raise NoResolvableFrequencyError("no bar block reached the contrast threshold")
    return cutoff


def measure_improvement(recon: Raster, single: Raster, spec: BarTargetSpec | None = None) -> ImprovementReport:
    """Score a reconstruction of the bar-target scene.

    Parameters
    ----------
    recon : Raster
        Reconstruction on the fine grid.
    single : Raster
        Single-frame capture pixel-replicated to the same dimensions (the
        baseline the factor is measured against).
    spec : BarTargetSpec, optional
        Ladder frequencies, contrast threshold and block margin.

    Returns
    -------
    ImprovementReport with the two resolvability cutoffs, their ratio, and
    RMSE of both images against the ground-truth bar scene.
    """
    spec = spec or BarTargetSpec()
    if recon.data.shape != single.data.shape:
        raise ConfigurationError("recon and single-frame rasters must share dimensions")
    if recon.width != recon.height:
        raise ConfigurationError("bar-target measurement expects square rasters")
    truth = synth_scene("bars", recon.width).data
    rc = _bar_cutoff(recon.data, spec)
    sc = _bar_cutoff(single.data, spec)
    return ImprovementReport(
        single_frame_cutoff=sc,
        recon_cutoff=rc,
        factor=rc / sc,
        rmse_single=float(np.sqrt(np.mean((single.data - truth) ** 2))),
        rmse_recon=float(np.sqrt(np.mean((recon.data - truth) ** 2))),
    )


def write_pgm(path, raster: Raster):
    """Binary PGM, maxval 65535, big-endian samples, values clipped to [0, 1]."""
    scaled = np.clip(raster.data, 0.0, 1.0) * 65535.0
    samples = np.round(scaled).astype(">u2")
    with open(path, "wb") as f:
        f.write(f"P5\n{raster.width} {raster.height}\n65535\n".encode("ascii"))
        f.write(samples.tobytes())


def read_pgm(path) -> Raster:
    with open(path, "rb") as f:
        raw = f.read()
    tokens = []
    pos = 0
    while len(tokens) < 4 and pos < len(raw):
        # header tokens separated by whitespace; '#' starts a comment line
        if raw[pos : pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        if raw[pos : pos + 1].isspace():
            pos += 1
            continue
        end = pos
        while end < len(raw) and not raw[end : end + 1].isspace():
            end += 1
        tokens.append(raw[pos:end])
        pos = end
    if len(tokens) != 4 or tokens[0] != b"P5":
        raise ConfigurationError(f"{path}: not a binary PGM")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 65535:
        raise ConfigurationError(f"{path}: expected maxval 65535, got {maxval}")
    data = np.frombuffer(raw, dtype=">u2", count=width * height, offset=pos + 1)
    return Raster(data.reshape(height, width).astype(float) / 65535.0)


def write_capture_set(dirpath, cs: CaptureSet):
    """Frames as numbered PGMs plus a manifest CSV of (frame, dx, dy)."""
    os.makedirs(dirpath, exist_ok=True)
    lines = ["frame,dx,dy"]
    written = []
    for k, (frame, (dx, dy)) in enumerate(zip(cs.frames, cs.shifts)):
        name = f"frame_{k:03d}.pgm"
        write_pgm(os.path.join(dirpath, name), frame)
        lines.append(f"{name},{format(dx, '.17g')},{format(dy, '.17g')}")
        written.append(name)
    manifest = os.path.join(dirpath, "manifest.csv")
    with open(manifest, "w") as f:
        f.write("\n".join(lines) + "\n")
    return [os.path.join(dirpath, n) for n in written] + [manifest]


def read_capture_set(dirpath, q: int) -> CaptureSet:
    """Rebuild a capture set from a directory written by write_capture_set.

    Noise level and seed are not stored in the manifest; the returned set
    carries the data needed for reconstruction only.
    """
    manifest = os.path.join(dirpath, "manifest.csv")
    frames, shifts = [], []
    with open(manifest) as f:
        header = f.readline().strip()
        if header != "frame,dx,dy":
            raise ConfigurationError(f"{manifest}: unexpected header {header!r}")
        for line in f:
            if not line.strip():
                continue
            name, dx, dy = line.strip().split(",")
            frames.append(read_pgm(os.path.join(dirpath, name)))
            shifts.append((float(dx), float(dy)))
    return CaptureSet(tuple(frames), tuple(shifts), q)
