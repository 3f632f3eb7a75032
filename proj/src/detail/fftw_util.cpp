#include "detail/fftw_util.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

namespace ballmatch::detail {

namespace {

// FFTW's planner is not thread-safe; executing cached plans is.
std::mutex g_planner_mutex;

fftw_plan rows_plan(int n, int count) {
    static std::map<std::pair<int, int>, fftw_plan> cache;
    std::lock_guard lock(g_planner_mutex);
    auto it = cache.find({n, count});
    if (it != cache.end()) return it->second;
    std::vector<double> in(static_cast<std::size_t>(n) * count);
    std::vector<fftw_complex> out(static_cast<std::size_t>(n / 2 + 1) * count);
    fftw_plan p = fftw_plan_many_dft_r2c(1, &n, count, in.data(), nullptr, 1, n, out.data(),
                                         nullptr, 1, n / 2 + 1,
                                         FFTW_ESTIMATE | FFTW_UNALIGNED);
    cache[{n, count}] = p;
    return p;
}

fftw_plan cube_plan_r2c(int n) {
    static std::map<int, fftw_plan> cache;
    std::lock_guard lock(g_planner_mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<double> in(static_cast<std::size_t>(n) * n * n);
    std::vector<fftw_complex> out(static_cast<std::size_t>(n) * n * (n / 2 + 1));
    fftw_plan p =
        fftw_plan_dft_r2c_3d(n, n, n, in.data(), out.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
    cache[n] = p;
    return p;
}

fftw_plan cube_plan_c2r(int n) {
    static std::map<int, fftw_plan> cache;
    std::lock_guard lock(g_planner_mutex);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<fftw_complex> in(static_cast<std::size_t>(n) * n * (n / 2 + 1));
    std::vector<double> out(static_cast<std::size_t>(n) * n * n);
    fftw_plan p =
        fftw_plan_dft_c2r_3d(n, n, n, in.data(), out.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
    cache[n] = p;
    return p;
}

}  // namespace

void dft_r2c_rows(int n, int count, const double* in, std::complex<double>* out) {
    fftw_plan p = rows_plan(n, count);
    fftw_execute_dft_r2c(p, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

void dft_r2c_3d(int n, const double* in, std::complex<double>* out) {
    fftw_plan p = cube_plan_r2c(n);
    fftw_execute_dft_r2c(p, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

void dft_c2r_3d(int n, const std::complex<double>* in, double* out) {
    fftw_plan p = cube_plan_c2r(n);
    // c2r destroys its input in FFTW; callers pass a scratch copy.
    fftw_execute_dft_c2r(p, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                         out);
}

}  // namespace ballmatch::detail
