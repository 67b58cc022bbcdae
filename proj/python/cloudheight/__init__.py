"""Cloud-top height estimation from multi-angle stereo imagery."""

from ._cloudheight import (
    DEFAULT_NUGGET,
    MISR_PITCH_M,
    Camera,
    ConfigError,
    DegenerateError,
    DomainError,
    Error,
    EstimatorConfig,
    HeightWind,
    IoError,
    LikelihoodProfile,
    MaternParams,
    Method,
    Mode,
    OutOfRasterError,
    PixelShift,
    Rejection,
    SearchGrid,
    SigmaDivisor,
    SimConfig,
    across_track_parallax,
    along_track_parallax,
    bessel_k,
    cov_matrix,
    height_map,
    high_cloud_loglik,
    low_cloud_loglik,
    matern,
    misr_cameras,
    rep_seed,
    run_table1,
    search,
    shift_for_camera,
    simulate_scene,
    simulate_strip,
    stabilize,
)


def camera(name):
    """Look up a camera of the MISR bank by name."""
    for cam in misr_cameras():
        if cam.name == name:
            return cam
    raise KeyError(name)


__version__ = "0.1.0"
