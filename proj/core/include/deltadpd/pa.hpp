#ifndef DELTADPD_PA_HPP
#define DELTADPD_PA_HPP

#include <string>
#include <vector>

#include "deltadpd/iq.hpp"

namespace deltadpd {

/// Memory-polynomial PA surrogate:
///   y_t = sum_{k,m} a_{k,m} * x_{t-m} * |x_{t-m}|^{k-1},
/// odd orders k in {1,3,5,7}, memory taps m in 0..M. Zero-padded history
/// for the first M samples.
struct MemoryPolyPa {
    struct Term {
        int order = 1;  // odd k
        int tap = 0;    // m
        cplx coeff{0.0, 0.0};
    };
    std::vector<Term> terms;
    double gain_db = 0.0;

    void validate() const; // finite coeffs, nonzero a_{1,0}
    cplx linear_gain() const; // a_{1,0}
};

IqSignal pa_simulate(const MemoryPolyPa& pa, const IqSignal& x);

/// Fixed, documented coefficient set used as the ground-truth PA in the
/// synthetic pipeline: compressive AM/AM (a few dB at unit input), AM/PM
/// rotation, memory depth 4.
MemoryPolyPa default_test_pa();

/// Coefficient file: text lines "k m re im".
void save_pa(const std::string& path, const MemoryPolyPa& pa);
MemoryPolyPa load_pa(const std::string& path);

} // namespace deltadpd

#endif
