#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ballmatch {

// Cubic real-valued voxel grid. Storage is x-fastest (MRC column order).
// The basis lives on the unit ball; voxel (i,j,k) maps to physical
// coordinates x = (i - n/2) * 2/n, so the ball radius equals n/2 voxels.
struct Volume {
    int n = 0;
    double voxel_size = 1.0;  // physical units per voxel (metadata)
    std::vector<double> data;

    Volume() = default;
    Volume(int n_, double voxel_size_ = 1.0)
        : n(n_), voxel_size(voxel_size_), data(static_cast<std::size_t>(n_) * n_ * n_, 0.0) {
        if (n_ < 2) throw std::invalid_argument("Volume: grid size must be >= 2");
    }

    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * n + y) * n + x;
    }
    double& at(int x, int y, int z) { return data[index(x, y, z)]; }
    double at(int x, int y, int z) const { return data[index(x, y, z)]; }

    // Unit-ball coordinate of a voxel centre along one axis.
    double coord(int i) const { return (i - n / 2) * (2.0 / n); }

    std::size_t size() const { return data.size(); }
};

double volume_l2_norm(const Volume& v);
double volume_mean(const Volume& v);

// Trilinear sample at unit-ball coordinates; zero outside the grid.
double sample_trilinear(const Volume& v, double x, double y, double z);

// Integer-voxel window shift: out[i] = in[i + s], zero where the source
// window leaves the grid.
Volume shift_volume(const Volume& v, const std::array<int, 3>& s);

}  // namespace ballmatch
