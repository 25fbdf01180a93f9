import math

TWO_PI = 2.0 * math.pi


def mhz_to_rad_ns(value_mhz):
    # f/2π in MHz -> angular frequency in rad/ns
    return TWO_PI * value_mhz * 1e-3


def rad_ns_to_mhz(value):
    return value / TWO_PI * 1e3


def khz_to_rad_ns(value_khz):
    return TWO_PI * value_khz * 1e-6


def subpixels_per_pixel(pixel_dt, subpixel_dt, tol=1e-9):
    """Integer ratio Δt/δt, or None when the grids do not nest."""
    ratio = pixel_dt / subpixel_dt
    nearest = round(ratio)
    if nearest < 1 or abs(ratio - nearest) > tol * max(1.0, ratio):
        return None
    return int(nearest)


def parse_float_list(text):
    if text is None:
        return []
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).replace(';', ',').split(',') if v.strip()]


def parse_int_list(text):
    return [int(round(v)) for v in parse_float_list(text)]


UNITS_TABLE = """Units of scenario-file keys:
  chi_mhz, kappa_mhz, detuning_mhz, bandwidth_mhz   frequency/2pi in MHz
  kerr_khz                                          frequency/2pi in kHz
  horizon_ns, pixel_dt_ns, subpixel_dt_ns           ns
  beta_over_T                                       dimensionless (beta = value / horizon_ns)
  p_norm                                            drive power / one-photon power
  pulse CSV columns u_k / s_k                       MHz (amplitude/2pi)"""
