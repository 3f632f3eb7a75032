#include "ballmatch/rotation.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ballmatch {

namespace {
constexpr double kPi = std::numbers::pi;
}

Rotation::Rotation(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (!(n > 0.0) || !std::isfinite(n))
        throw std::invalid_argument("Rotation: quaternion must be nonzero and finite");
    m_w = w / n;
    m_x = x / n;
    m_y = y / n;
    m_z = z / n;
}

Rotation Rotation::from_axis_angle(const Eigen::Vector3d& axis, double angle_rad) {
    const double n = axis.norm();
    if (!(n > 0.0)) throw std::invalid_argument("Rotation: axis must be nonzero");
    const double h = 0.5 * angle_rad;
    const double s = std::sin(h) / n;
    return {std::cos(h), axis.x() * s, axis.y() * s, axis.z() * s};
}

Rotation Rotation::from_euler_zyz(double alpha, double beta, double gamma) {
    return from_axis_angle({0, 0, 1}, alpha) * from_axis_angle({0, 1, 0}, beta) *
           from_axis_angle({0, 0, 1}, gamma);
}

Rotation Rotation::from_matrix(const Eigen::Matrix3d& m) {
    // Shepperd's method: pick the largest diagonal combination.
    const double t = m.trace();
    double w, x, y, z;
    if (t > 0.0) {
        double s = std::sqrt(t + 1.0) * 2.0;
        w = 0.25 * s;
        x = (m(2, 1) - m(1, 2)) / s;
        y = (m(0, 2) - m(2, 0)) / s;
        z = (m(1, 0) - m(0, 1)) / s;
    } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
        double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2.0;
        w = (m(2, 1) - m(1, 2)) / s;
        x = 0.25 * s;
        y = (m(0, 1) + m(1, 0)) / s;
        z = (m(0, 2) + m(2, 0)) / s;
    } else if (m(1, 1) > m(2, 2)) {
        double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2.0;
        w = (m(0, 2) - m(2, 0)) / s;
        x = (m(0, 1) + m(1, 0)) / s;
        y = 0.25 * s;
        z = (m(1, 2) + m(2, 1)) / s;
    } else {
        double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2.0;
        w = (m(1, 0) - m(0, 1)) / s;
        x = (m(0, 2) + m(2, 0)) / s;
        y = (m(1, 2) + m(2, 1)) / s;
        z = 0.25 * s;
    }
    return {w, x, y, z};
}

Eigen::Matrix3d Rotation::matrix() const {
    const double w = m_w, x = m_x, y = m_y, z = m_z;
    Eigen::Matrix3d m;
    m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return m;
}

EulerZyz Rotation::euler_zyz() const {
    const Eigen::Matrix3d m = matrix();
    EulerZyz e;
    const double sb = std::hypot(m(0, 2), m(1, 2));
    e.beta = std::atan2(sb, m(2, 2));
    if (sb > 1e-12) {
        e.alpha = std::atan2(m(1, 2), m(0, 2));
        e.gamma = std::atan2(m(2, 1), -m(2, 0));
    } else if (m(2, 2) > 0.0) {  // beta = 0: only alpha+gamma determined
        e.alpha = std::atan2(m(1, 0), m(0, 0));
        e.gamma = 0.0;
    } else {  // beta = pi: only alpha-gamma determined
        e.alpha = std::atan2(-m(1, 0), -m(0, 0));
        e.gamma = 0.0;
    }
    return e;
}

Rotation Rotation::operator*(const Rotation& r) const {
    return unchecked(m_w * r.m_w - m_x * r.m_x - m_y * r.m_y - m_z * r.m_z,
                     m_w * r.m_x + m_x * r.m_w + m_y * r.m_z - m_z * r.m_y,
                     m_w * r.m_y - m_x * r.m_z + m_y * r.m_w + m_z * r.m_x,
                     m_w * r.m_z + m_x * r.m_y - m_y * r.m_x + m_z * r.m_w);
}

double Rotation::angle_to(const Rotation& other) const {
    // relative quaternion q^-1 * other; atan2 keeps precision near 0 and pi
    const Rotation r = inverse() * other;
    const double v = std::sqrt(r.m_x * r.m_x + r.m_y * r.m_y + r.m_z * r.m_z);
    return 2.0 * std::atan2(v, std::abs(r.m_w));
}

double geodesic_degrees(const Rotation& g1, const Rotation& g2) {
    return g1.angle_to(g2) * 180.0 / kPi;
}

}  // namespace ballmatch
