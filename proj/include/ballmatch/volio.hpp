#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>

#include "ballmatch/philox.hpp"
#include "ballmatch/rotation.hpp"
#include "ballmatch/volume.hpp"

namespace ballmatch {

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct mrc_format_error : io_error {
    using io_error::io_error;
};
struct mrc_short_read_error : io_error {
    using io_error::io_error;
};

// MRC2014, mode 2 (32-bit float), little-endian, 1024-byte header.
// Reading accepts modes 0/1/2/6 and either byte order; the voxel payload is
// normalized to x-fastest axis order.
Volume read_mrc(const std::filesystem::path& path);
void write_mrc(const Volume& v, const std::filesystem::path& path);

// Voxel-domain rotation by trilinear interpolation (out(x) = in(R^-1 x)).
// Deliberately independent of the coefficient-space rotation path; used as
// its oracle and for phantom ground truth.
Volume rotate_volume_trilinear(const Volume& v, const Rotation& g);

struct PhantomSpec {
    int n = 64;
    int blobs = 6;
    double support_radius = 0.8;          // blob centres stay well inside this
    std::uint64_t seed = 0;
    std::optional<double> snr;            // signal variance / noise variance
    std::optional<double> wedge_theta_deg;
    std::optional<Rotation> rotation;     // drawn from seed when unset
    std::optional<std::array<int, 3>> shift;  // voxels; drawn from seed when unset
};

struct Phantom {
    Volume tmpl;          // clean template
    Volume subtomo;       // rotated + shifted + wedge-filtered + noisy copy
    Rotation rotation;    // applied rotation (ground truth)
    std::array<int, 3> shift{0, 0, 0};
    double noise_sigma = 0.0;
};

// Deterministic in spec.seed (philox4x32-10 streams).
Phantom make_phantom(const PhantomSpec& spec);

// Haar-uniform random rotation (Shoemake subgroup algorithm).
Rotation haar_rotation(PhiloxStream& rng);

}  // namespace ballmatch
