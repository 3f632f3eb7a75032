#include "ballmatch/volio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "ballmatch/philox.hpp"
#include "ballmatch/xcorr.hpp"

namespace ballmatch {

namespace {

void put_u32(std::vector<unsigned char>& buf, std::size_t at, std::uint32_t v) {
    buf[at] = v & 0xFF;
    buf[at + 1] = (v >> 8) & 0xFF;
    buf[at + 2] = (v >> 16) & 0xFF;
    buf[at + 3] = (v >> 24) & 0xFF;
}

void put_i32(std::vector<unsigned char>& buf, std::size_t at, std::int32_t v) {
    put_u32(buf, at, static_cast<std::uint32_t>(v));
}

void put_f32(std::vector<unsigned char>& buf, std::size_t at, float v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    put_u32(buf, at, u);
}

std::uint32_t get_u32(const unsigned char* p, bool swap) {
    std::uint32_t v = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                      (static_cast<std::uint32_t>(p[2]) << 16) |
                      (static_cast<std::uint32_t>(p[3]) << 24);
    if (swap) v = __builtin_bswap32(v);
    return v;
}

std::int32_t get_i32(const unsigned char* p, bool swap) {
    return static_cast<std::int32_t>(get_u32(p, swap));
}

float get_f32(const unsigned char* p, bool swap) {
    const std::uint32_t u = get_u32(p, swap);
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

constexpr std::size_t kHeaderSize = 1024;

}  // namespace

Volume read_mrc(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("read_mrc: cannot open " + path.string());
    std::vector<unsigned char> hdr(kHeaderSize);
    in.read(reinterpret_cast<char*>(hdr.data()), kHeaderSize);
    if (in.gcount() != static_cast<std::streamsize>(kHeaderSize))
        throw mrc_short_read_error("read_mrc: truncated header in " + path.string());

    if (std::memcmp(hdr.data() + 208, "MAP ", 4) != 0)
        throw mrc_format_error("read_mrc: missing MAP stamp in " + path.string());
    const bool swap = hdr[212] == 0x11;  // big-endian source

    const std::int32_t nx = get_i32(hdr.data() + 0, swap);
    const std::int32_t ny = get_i32(hdr.data() + 4, swap);
    const std::int32_t nz = get_i32(hdr.data() + 8, swap);
    const std::int32_t mode = get_i32(hdr.data() + 12, swap);
    if (nx <= 0 || ny <= 0 || nz <= 0 || nx > (1 << 14) || ny > (1 << 14) || nz > (1 << 14))
        throw mrc_format_error("read_mrc: implausible dimensions");
    if (mode != 0 && mode != 1 && mode != 2 && mode != 6)
        throw mrc_format_error("read_mrc: unsupported mode " + std::to_string(mode));
    if (nx != ny || ny != nz)
        throw mrc_format_error("read_mrc: volume is not cubic");

    const std::int32_t mx = get_i32(hdr.data() + 28, swap);
    const float cell_x = get_f32(hdr.data() + 40, swap);
    const std::int32_t mapc = get_i32(hdr.data() + 64, swap);
    const std::int32_t mapr = get_i32(hdr.data() + 68, swap);
    const std::int32_t maps = get_i32(hdr.data() + 72, swap);
    const std::int32_t nsymbt = get_i32(hdr.data() + 92, swap);

    std::array<int, 3> perm{mapc - 1, mapr - 1, maps - 1};
    std::array<bool, 3> seen{false, false, false};
    for (int p : perm) {
        if (p < 0 || p > 2 || seen[p]) throw mrc_format_error("read_mrc: bad axis order");
        seen[p] = true;
    }

    if (nsymbt < 0) throw mrc_format_error("read_mrc: negative extended header size");
    in.seekg(kHeaderSize + nsymbt, std::ios::beg);

    const std::size_t count = static_cast<std::size_t>(nx) * ny * nz;
    const std::size_t elem = mode == 0 ? 1 : (mode == 2 ? 4 : 2);
    std::vector<unsigned char> payload(count * elem);
    in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (in.gcount() != static_cast<std::streamsize>(payload.size()))
        throw mrc_short_read_error("read_mrc: truncated voxel payload in " + path.string());

    Volume v(nx);
    v.voxel_size = (mx > 0 && cell_x > 0.0f) ? static_cast<double>(cell_x) / mx : 1.0;

    auto decode = [&](std::size_t i) -> double {
        const unsigned char* p = payload.data() + i * elem;
        switch (mode) {
            case 0: return static_cast<double>(static_cast<signed char>(p[0]));
            case 1: {
                std::uint16_t u = static_cast<std::uint16_t>(p[0]) |
                                  (static_cast<std::uint16_t>(p[1]) << 8);
                if (swap) u = static_cast<std::uint16_t>((u >> 8) | (u << 8));
                return static_cast<double>(static_cast<std::int16_t>(u));
            }
            case 6: {
                std::uint16_t u = static_cast<std::uint16_t>(p[0]) |
                                  (static_cast<std::uint16_t>(p[1]) << 8);
                if (swap) u = static_cast<std::uint16_t>((u >> 8) | (u << 8));
                return static_cast<double>(u);
            }
            default: return static_cast<double>(get_f32(p, swap));
        }
    };

    // normalize storage to x-fastest
    std::size_t i = 0;
    std::array<int, 3> pos{};
    for (int s = 0; s < nz; ++s)
        for (int r = 0; r < ny; ++r)
            for (int c = 0; c < nx; ++c, ++i) {
                pos[perm[0]] = c;
                pos[perm[1]] = r;
                pos[perm[2]] = s;
                v.at(pos[0], pos[1], pos[2]) = decode(i);
            }
    return v;
}

void write_mrc(const Volume& v, const std::filesystem::path& path) {
    const int n = v.n;
    double dmin = v.data.empty() ? 0.0 : v.data[0];
    double dmax = dmin, sum = 0.0, sum2 = 0.0;
    for (double d : v.data) {
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
        sum += d;
        sum2 += d * d;
    }
    const double mean = v.data.empty() ? 0.0 : sum / static_cast<double>(v.data.size());
    const double rms =
        v.data.empty() ? 0.0
                       : std::sqrt(std::max(0.0, sum2 / static_cast<double>(v.data.size()) -
                                                     mean * mean));

    std::vector<unsigned char> hdr(kHeaderSize, 0);
    put_i32(hdr, 0, n);
    put_i32(hdr, 4, n);
    put_i32(hdr, 8, n);
    put_i32(hdr, 12, 2);  // mode 2: float32
    put_i32(hdr, 28, n);  // mx my mz
    put_i32(hdr, 32, n);
    put_i32(hdr, 36, n);
    put_f32(hdr, 40, static_cast<float>(n * v.voxel_size));  // cella
    put_f32(hdr, 44, static_cast<float>(n * v.voxel_size));
    put_f32(hdr, 48, static_cast<float>(n * v.voxel_size));
    put_f32(hdr, 52, 90.0f);  // cellb
    put_f32(hdr, 56, 90.0f);
    put_f32(hdr, 60, 90.0f);
    put_i32(hdr, 64, 1);  // mapc mapr maps
    put_i32(hdr, 68, 2);
    put_i32(hdr, 72, 3);
    put_f32(hdr, 76, static_cast<float>(dmin));
    put_f32(hdr, 80, static_cast<float>(dmax));
    put_f32(hdr, 84, static_cast<float>(mean));
    put_i32(hdr, 88, 1);       // ispg: 3D volume
    put_i32(hdr, 108, 20140);  // nversion
    std::memcpy(hdr.data() + 208, "MAP ", 4);
    hdr[212] = 0x44;  // little-endian machine stamp
    hdr[213] = 0x44;
    put_f32(hdr, 216, static_cast<float>(rms));

    std::ofstream outf(path, std::ios::binary | std::ios::trunc);
    if (!outf) throw io_error("write_mrc: cannot open " + path.string() + " for writing");
    outf.write(reinterpret_cast<const char*>(hdr.data()), kHeaderSize);
    std::vector<unsigned char> payload(v.data.size() * 4);
    for (std::size_t i = 0; i < v.data.size(); ++i)
        put_f32(payload, i * 4, static_cast<float>(v.data[i]));
    outf.write(reinterpret_cast<const char*>(payload.data()),
               static_cast<std::streamsize>(payload.size()));
    if (!outf) throw io_error("write_mrc: write failed for " + path.string());
}

Volume rotate_volume_trilinear(const Volume& v, const Rotation& g) {
    const Eigen::Matrix3d rinv = g.matrix().transpose();
    Volume out(v.n, v.voxel_size);
    for (int z = 0; z < v.n; ++z)
        for (int y = 0; y < v.n; ++y)
            for (int x = 0; x < v.n; ++x) {
                const Eigen::Vector3d p =
                    rinv * Eigen::Vector3d(v.coord(x), v.coord(y), v.coord(z));
                out.at(x, y, z) = sample_trilinear(v, p.x(), p.y(), p.z());
            }
    return out;
}

Rotation haar_rotation(PhiloxStream& rng) {
    const double u1 = rng.next_unit();
    const double u2 = rng.next_unit();
    const double u3 = rng.next_unit();
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    const double t2 = 2.0 * std::numbers::pi * u2, t3 = 2.0 * std::numbers::pi * u3;
    return Rotation(b * std::cos(t3), a * std::sin(t2), a * std::cos(t2), b * std::sin(t3));
}

Phantom make_phantom(const PhantomSpec& spec) {
    if (spec.n < 8 || spec.n % 2 != 0)
        throw std::invalid_argument("make_phantom: grid size must be even and >= 8");
    if (spec.blobs < 1) throw std::invalid_argument("make_phantom: need at least one blob");
    if (!(spec.support_radius > 0.0 && spec.support_radius < 1.0))
        throw std::invalid_argument("make_phantom: support radius must lie in (0,1)");

    struct Blob {
        Eigen::Vector3d center;
        Eigen::Matrix3d precision;  // R diag(1/sigma^2) R^T
        double amplitude;
    };

    PhiloxStream geom(spec.seed, 0);
    std::vector<Blob> blobs;
    for (int b = 0; b < spec.blobs; ++b) {
        // log-uniform size mixture: broad blobs carry the bulk of the mass,
        // narrow off-centre ones populate the high angular degrees
        const double base =
            std::exp(geom.next_uniform(std::log(0.028), std::log(0.085)));
        Eigen::Vector3d sigma;
        for (int i = 0; i < 3; ++i) sigma[i] = base * geom.next_uniform(0.8, 1.25);
        const Rotation orient = haar_rotation(geom);
        Eigen::Vector3d dir(geom.next_gaussian(), geom.next_gaussian(), geom.next_gaussian());
        if (dir.norm() < 1e-12) dir = Eigen::Vector3d(1, 0, 0);
        dir.normalize();
        // keep 3 sigma of the widest axis inside the support radius
        const double reach = std::max(0.0, spec.support_radius - 3.0 * sigma.maxCoeff());
        const double radius = reach * std::cbrt(geom.next_unit());
        const double mag = geom.next_uniform(0.5, 1.0) * std::pow(0.05 / base, 0.75);
        const double amp = geom.next_u32() & 1 ? mag : -mag;
        const Eigen::Matrix3d r = orient.matrix();
        Blob blob;
        blob.center = radius * dir;
        blob.precision =
            r * Eigen::DiagonalMatrix<double, 3>(1.0 / (sigma[0] * sigma[0]),
                                                 1.0 / (sigma[1] * sigma[1]),
                                                 1.0 / (sigma[2] * sigma[2])) *
            r.transpose();
        blob.amplitude = amp;
        blobs.push_back(blob);
    }

    Phantom out;
    out.tmpl = Volume(spec.n);
    for (int z = 0; z < spec.n; ++z)
        for (int y = 0; y < spec.n; ++y)
            for (int x = 0; x < spec.n; ++x) {
                const Eigen::Vector3d p(out.tmpl.coord(x), out.tmpl.coord(y),
                                        out.tmpl.coord(z));
                double val = 0.0;
                for (const auto& blob : blobs) {
                    const Eigen::Vector3d d = p - blob.center;
                    const double q = d.dot(blob.precision * d);
                    if (q < 80.0) val += blob.amplitude * std::exp(-0.5 * q);
                }
                out.tmpl.at(x, y, z) = val;
            }

    PhiloxStream rot_stream(spec.seed, 1);
    out.rotation = spec.rotation ? *spec.rotation : haar_rotation(rot_stream);
    PhiloxStream shift_stream(spec.seed, 2);
    if (spec.shift) {
        out.shift = *spec.shift;
    } else {
        for (int i = 0; i < 3; ++i) out.shift[i] = shift_stream.next_int(-2, 2);
    }

    Volume sub = rotate_volume_trilinear(out.tmpl, out.rotation);
    sub = shift_volume(sub, {-out.shift[0], -out.shift[1], -out.shift[2]});
    if (spec.wedge_theta_deg)
        sub = apply_wedge(sub, build_wedge_mask(spec.n, *spec.wedge_theta_deg));

    if (spec.snr) {
        if (!(*spec.snr > 0.0)) throw std::invalid_argument("make_phantom: snr must be > 0");
        // signal variance measured inside the unit ball only
        double sum = 0.0, sum2 = 0.0;
        std::size_t count = 0;
        for (int z = 0; z < spec.n; ++z)
            for (int y = 0; y < spec.n; ++y)
                for (int x = 0; x < spec.n; ++x) {
                    const double cx = sub.coord(x), cy = sub.coord(y), cz = sub.coord(z);
                    if (cx * cx + cy * cy + cz * cz >= 1.0) continue;
                    const double d = sub.at(x, y, z);
                    sum += d;
                    sum2 += d * d;
                    ++count;
                }
        const double mean = sum / static_cast<double>(count);
        const double var = std::max(0.0, sum2 / static_cast<double>(count) - mean * mean);
        out.noise_sigma = std::sqrt(var / *spec.snr);
        PhiloxStream noise(spec.seed, 3);
        for (double& d : sub.data) d += out.noise_sigma * noise.next_gaussian();
    }

    // round through float32 so volumes survive MRC mode-2 round trips bit-exactly
    for (double& d : out.tmpl.data) d = static_cast<double>(static_cast<float>(d));
    for (double& d : sub.data) d = static_cast<double>(static_cast<float>(d));
    out.subtomo = std::move(sub);
    return out;
}

}  // namespace ballmatch
