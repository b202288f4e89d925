#ifndef DELTADPD_IQ_HPP
#define DELTADPD_IQ_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "deltadpd/errors.hpp"

namespace deltadpd {

using cplx = std::complex<double>;

/// Complex baseband sample sequence with sample-rate metadata.
struct IqSignal {
    std::vector<cplx> samples;
    double sample_rate_hz = 1.0;
    bool unit_normalized = false;

    std::size_t size() const { return samples.size(); }

    double mean_power() const {
        double acc = 0.0;
        for (const auto& s : samples) acc += std::norm(s);
        return samples.empty() ? 0.0 : acc / static_cast<double>(samples.size());
    }

    double peak_power() const {
        double pk = 0.0;
        for (const auto& s : samples) pk = std::max(pk, std::norm(s));
        return pk;
    }

    void check_finite(const char* what) const {
        for (const auto& s : samples)
            if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
                throw NumericError(std::string(what) + ": non-finite sample");
    }
};

/// Scale so max |sample| == 1 and set the unit-normalized flag.
inline IqSignal normalize_unit(IqSignal sig) {
    double pk = std::sqrt(sig.peak_power());
    if (pk > 0.0)
        for (auto& s : sig.samples) s /= pk;
    sig.unit_normalized = true;
    return sig;
}

} // namespace deltadpd

#endif
