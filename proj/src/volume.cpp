#include "ballmatch/volume.hpp"

#include <cmath>

namespace ballmatch {

double volume_l2_norm(const Volume& v) {
    double s = 0.0;
    for (double x : v.data) s += x * x;
    return std::sqrt(s);
}

double volume_mean(const Volume& v) {
    double s = 0.0;
    for (double x : v.data) s += x;
    return v.data.empty() ? 0.0 : s / static_cast<double>(v.data.size());
}

double sample_trilinear(const Volume& v, double x, double y, double z) {
    const int n = v.n;
    // voxel-space position; voxel i sits at coord (i - n/2) * 2/n
    const double u = x * (n / 2.0) + n / 2.0;
    const double w = y * (n / 2.0) + n / 2.0;
    const double q = z * (n / 2.0) + n / 2.0;
    const int i0 = static_cast<int>(std::floor(u));
    const int j0 = static_cast<int>(std::floor(w));
    const int k0 = static_cast<int>(std::floor(q));
    const double fx = u - i0, fy = w - j0, fz = q - k0;

    double acc = 0.0;
    for (int dz = 0; dz < 2; ++dz) {
        const int k = k0 + dz;
        if (k < 0 || k >= n) continue;
        const double wz = dz ? fz : 1.0 - fz;
        for (int dy = 0; dy < 2; ++dy) {
            const int j = j0 + dy;
            if (j < 0 || j >= n) continue;
            const double wy = dy ? fy : 1.0 - fy;
            for (int dx = 0; dx < 2; ++dx) {
                const int i = i0 + dx;
                if (i < 0 || i >= n) continue;
                const double wx = dx ? fx : 1.0 - fx;
                acc += wx * wy * wz * v.at(i, j, k);
            }
        }
    }
    return acc;
}

Volume shift_volume(const Volume& v, const std::array<int, 3>& s) {
    Volume out(v.n, v.voxel_size);
    const int n = v.n;
    for (int z = 0; z < n; ++z) {
        const int sz = z + s[2];
        if (sz < 0 || sz >= n) continue;
        for (int y = 0; y < n; ++y) {
            const int sy = y + s[1];
            if (sy < 0 || sy >= n) continue;
            for (int x = 0; x < n; ++x) {
                const int sx = x + s[0];
                if (sx < 0 || sx >= n) continue;
                out.at(x, y, z) = v.at(sx, sy, sz);
            }
        }
    }
    return out;
}

}  // namespace ballmatch
