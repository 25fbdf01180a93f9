import os


class Config:
    APP_NAME = 'open-grape-reset'
    VERSION = '1.0.0'
    CONFIG_SCHEMA_VERSION = '1'

    # Integrator defaults (rad/ns and ns units everywhere inside the library)
    RTOL = float(os.getenv('GRAPE_RTOL', '1e-8'))
    ATOL = float(os.getenv('GRAPE_ATOL', '1e-10'))
    MAX_STEPS_PER_SUBPIXEL = int(os.getenv('GRAPE_MAX_STEPS_PER_SUBPIXEL', '10000'))
    REHERMITIZE_EVERY = int(os.getenv('GRAPE_REHERMITIZE_EVERY', '10'))
    FIXED_SUBSTEPS = int(os.getenv('GRAPE_FIXED_SUBSTEPS', '10'))

    # Optimizer defaults
    MAX_ITERS = int(os.getenv('GRAPE_MAX_ITERS', '500'))
    TOL_G = float(os.getenv('GRAPE_TOL_G', '1e-7'))
    TOL_F = float(os.getenv('GRAPE_TOL_F', '1e-10'))
    WOLFE_C1 = 1e-4
    WOLFE_C2 = 0.9
    LINE_SEARCH_TRIALS = 40
    LBFGS_MEMORY = 20
    LOG_EVERY = int(os.getenv('GRAPE_LOG_EVERY', '10'))

    # Reset scenario grid defaults
    PIXEL_DT_NS = 1.0
    SUBPIXEL_DT_NS = 0.1
    BANDWIDTH_MHZ = 100.0
    MEASUREMENT_KAPPA_TIMES = 5.0
    CALIBRATION_KAPPA_TIMES = 20.0
    TRUNCATION_LEAK_MAX = 1e-6
    POLY_DEGREE = 8

    # --quick scales every scenario down for CI
    QUICK_FOCK_DIM = 30
    QUICK_SUBPIXEL_DT_NS = 0.5
    QUICK_MAX_ITERS = 50

    OUTPUT_DIR = os.getenv('GRAPE_OUTPUT_DIR', os.path.join(os.getcwd(), 'runs'))
    JOBS = int(os.getenv('GRAPE_JOBS', '1'))
    LOG_LEVEL = os.getenv('GRAPE_LOG_LEVEL', 'INFO')
