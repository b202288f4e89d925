#ifndef DELTADPD_FFT_HPP
#define DELTADPD_FFT_HPP

#include <complex>
#include <vector>

namespace deltadpd {

// In-place-style complex FFT wrappers around FFTW (double precision,
// ESTIMATE plans, deterministic). Forward uses e^{-j2pi}, inverse is
// scaled by 1/N.
std::vector<std::complex<double>> fft(const std::vector<std::complex<double>>& in);
std::vector<std::complex<double>> ifft(const std::vector<std::complex<double>>& in);

} // namespace deltadpd

#endif
