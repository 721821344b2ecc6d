#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "nirsgaf/errors.hpp"
#include "nirsgaf/preprocess.hpp"

namespace nirsgaf::preprocess {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

struct PolePair {
    cplx z1, z2;       // digital poles; conjugates, or both real
    double angle;      // |arg z1|, used to line zeros up with nearby poles
};

cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

}  // namespace

std::complex<double> SosCascade::response_at(double freq_hz, double sample_rate_hz) const {
    const double w = 2.0 * kPi * freq_hz / sample_rate_hz;
    const cplx zi = std::exp(cplx(0.0, -w));  // z^-1
    cplx h(1.0, 0.0);
    for (const auto& s : sections)
        h *= (s.b0 + s.b1 * zi + s.b2 * zi * zi) / (1.0 + s.a1 * zi + s.a2 * zi * zi);
    return h;
}

SosCascade butterworth_bandpass(const FilterSpec& spec, double fs) {
    if (spec.order < 1) throw InvalidBand("filter order must be >= 1");
    const double f1 = spec.passband_low_hz, f2 = spec.passband_high_hz;
    if (!(f1 > 0.0) || !(f2 > f1) || !(f2 < fs / 2.0))
        throw InvalidBand("passband must satisfy 0 < low < high < sample_rate/2");

    // pre-warped analog edges (rad/s)
    const double w1 = 2.0 * fs * std::tan(kPi * f1 / fs);
    const double w2 = 2.0 * fs * std::tan(kPi * f2 / fs);
    if (!std::isfinite(w1) || !std::isfinite(w2)) throw InvalidBand("band edge too close to Nyquist");
    const double w0 = std::sqrt(w1 * w2);
    const double bw = w2 - w1;
    if (!(bw > 1e-12 * w0)) throw InvalidBand("pre-warped band edges collapse");

    const int n = spec.order;
    std::vector<PolePair> pairs;

    // analog prototype poles on the left unit semicircle; each pole with
    // positive imaginary part yields two sections (one per band-pass root
    // family), each real pole yields one
    for (int k = 0; k < n; ++k) {
        const double theta = kPi * static_cast<double>(2 * k + n + 1) / (2.0 * n);
        const cplx p(std::cos(theta), std::sin(theta));
        if (p.imag() < -1e-12) continue;  // conjugate handled with its partner

        const cplx a = p * (bw / 2.0);
        const cplx d = std::sqrt(a * a - w0 * w0);
        const cplx s_hi = a + d, s_lo = a - d;

        if (p.imag() > 1e-12) {
            for (const cplx& s : {s_hi, s_lo}) {
                const cplx z = bilinear(s, fs);
                pairs.push_back({z, std::conj(z), std::abs(std::arg(z))});
            }
        } else {
            const cplx z1 = bilinear(s_hi, fs), z2 = bilinear(s_lo, fs);
            pairs.push_back({z1, z2, std::max(std::abs(std::arg(z1)), std::abs(std::arg(z2)))});
        }
    }

    // 2n digital zeros: n at z=+1 (from s=0), n at z=-1 (from s=inf).
    // Give the DC zeros to the lowest-angle sections.
    std::sort(pairs.begin(), pairs.end(),
              [](const PolePair& a, const PolePair& b) { return a.angle < b.angle; });

    SosCascade cascade;
    int dc_zeros = n, nyq_zeros = n;
    for (const auto& pp : pairs) {
        Biquad s;
        const cplx sum = pp.z1 + pp.z2, prod = pp.z1 * pp.z2;
        s.a1 = -sum.real();
        s.a2 = prod.real();
        const int dc = std::min(2, dc_zeros);
        dc_zeros -= dc;
        nyq_zeros -= 2 - dc;
        if (dc == 2) {
            s.b0 = 1.0; s.b1 = -2.0; s.b2 = 1.0;   // (z-1)^2
        } else if (dc == 1) {
            s.b0 = 1.0; s.b1 = 0.0; s.b2 = -1.0;   // (z-1)(z+1)
        } else {
            s.b0 = 1.0; s.b1 = 2.0; s.b2 = 1.0;    // (z+1)^2
        }
        if (!(s.a2 < 1.0) || !(std::abs(s.a1) < 1.0 + s.a2))
            throw InvalidBand("designed section is not stable; band collapses numerically");
        cascade.sections.push_back(s);
    }

    // normalize to unit gain at the (warped) center frequency
    const double fc = fs / kPi * std::atan(w0 / (2.0 * fs));
    const double g = cascade.gain_at(fc, fs);
    if (!(g > 0.0) || !std::isfinite(g)) throw InvalidBand("degenerate passband gain");
    for (auto* b : {&cascade.sections[0].b0, &cascade.sections[0].b1, &cascade.sections[0].b2})
        *b /= g;

    return cascade;
}

std::vector<double> sos_filter(const SosCascade& cascade, const std::vector<double>& x) {
    std::vector<double> y = x;
    for (const auto& s : cascade.sections) {
        double s1 = 0.0, s2 = 0.0;  // direct form II transposed state
        for (double& v : y) {
            const double in = v;
            const double out = s.b0 * in + s1;
            s1 = s.b1 * in - s.a1 * out + s2;
            s2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
    return y;
}

namespace {

// pad -> forward -> reverse -> forward -> reverse -> trim
std::vector<double> zero_phase_once(const SosCascade& cascade, const std::vector<double>& x) {
    const std::size_t n = x.size();
    const std::size_t pad = cascade.pad_length();

    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t j = pad; j >= 1; --j) ext.push_back(2.0 * x[0] - x[j]);  // odd reflection
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t j = 1; j <= pad; ++j) ext.push_back(2.0 * x[n - 1] - x[n - 1 - j]);

    std::vector<double> y = sos_filter(cascade, ext);
    std::reverse(y.begin(), y.end());
    y = sos_filter(cascade, y);
    std::reverse(y.begin(), y.end());

    return std::vector<double>(y.begin() + static_cast<long>(pad),
                               y.begin() + static_cast<long>(pad + n));
}

}  // namespace

std::vector<double> filtfilt(const SosCascade& cascade, const std::vector<double>& x) {
    const std::size_t pad = cascade.pad_length();
    if (x.size() <= 3 * pad) throw SeriesTooShort(x.size(), 3 * pad);

    const std::vector<double> fwd = zero_phase_once(cascade, x);

    std::vector<double> rev_in(x.rbegin(), x.rend());
    const std::vector<double> rev = zero_phase_once(cascade, rev_in);

    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = 0.5 * (fwd[i] + rev[x.size() - 1 - i]);
    return out;
}

}  // namespace nirsgaf::preprocess
