#include "deltadpd/fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace deltadpd {

namespace {
// FFTW planner is not thread-safe; execution of a plan is.
std::mutex g_planner_mutex;

std::vector<std::complex<double>> transform(const std::vector<std::complex<double>>& in,
                                            int sign) {
    const int n = static_cast<int>(in.size());
    std::vector<std::complex<double>> out(in.size());
    if (n == 0) return out;
    // FFTW_ESTIMATE does not touch the input buffers during planning.
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(g_planner_mutex);
        plan = fftw_plan_dft_1d(
            n,
            reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data())),
            reinterpret_cast<fftw_complex*>(out.data()), sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(g_planner_mutex);
        fftw_destroy_plan(plan);
    }
    if (sign == FFTW_BACKWARD) {
        const double scale = 1.0 / static_cast<double>(n);
        for (auto& v : out) v *= scale;
    }
    return out;
}
} // namespace

std::vector<std::complex<double>> fft(const std::vector<std::complex<double>>& in) {
    return transform(in, FFTW_FORWARD);
}

std::vector<std::complex<double>> ifft(const std::vector<std::complex<double>>& in) {
    return transform(in, FFTW_BACKWARD);
}

} // namespace deltadpd
