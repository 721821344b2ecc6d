#include "nirsgaf/gaf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "nirsgaf/csvio.hpp"
#include "nirsgaf/errors.hpp"

namespace nirsgaf::gaf {

const char* gaf_kind_name(GafKind k) { return k == GafKind::GASF ? "gasf" : "gadf"; }

GafKind gaf_kind_from_name(const std::string& name) {
    if (name == "gasf" || name == "GASF") return GafKind::GASF;
    if (name == "gadf" || name == "GADF") return GafKind::GADF;
    throw ConfigError("unknown GAF kind \"" + name + "\" (expected gasf or gadf)");
}

RescaledSeries rescale(const std::vector<double>& x) {
    if (x.empty()) throw EmptySeries();
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i])) throw NonFiniteValue(i);

    const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
    const double lo = *lo_it, hi = *hi_it;

    RescaledSeries s;
    s.original_min = lo;
    s.original_max = hi;
    s.values.resize(x.size());
    if (hi > lo) {
        const double span = hi - lo;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double v = (2.0 * (x[i] - lo) - span) / span;
            s.values[i] = std::clamp(v, -1.0, 1.0);  // guard rounding at the extremes
        }
    }
    // constant series: all zeros (mid-range)
    return s;
}

std::vector<double> polar_angles(const RescaledSeries& s) {
    std::vector<double> phi(s.values.size());
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = std::acos(s.values[i]);
    return phi;
}

GafImage gasf(const RescaledSeries& s) {
    const std::size_t n = s.values.size();
    GafImage img;
    img.kind = GafKind::GASF;
    img.n = n;
    img.matrix.resize(n * n);

    std::vector<double> sine(n);  // sin(phi_i) = sqrt(1 - x_i^2)
    for (std::size_t i = 0; i < n; ++i) sine[i] = std::sqrt(1.0 - s.values[i] * s.values[i]);

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            // guard rounding at the extremes; cos(phi_i + phi_j) lies in [-1, 1]
            const double v =
                std::clamp(s.values[i] * s.values[j] - sine[i] * sine[j], -1.0, 1.0);
            img.at(i, j) = v;
            img.at(j, i) = v;
        }
    }
    return img;
}

GafImage gadf(const RescaledSeries& s) {
    const std::size_t n = s.values.size();
    GafImage img;
    img.kind = GafKind::GADF;
    img.n = n;
    img.matrix.resize(n * n);

    std::vector<double> sine(n);
    for (std::size_t i = 0; i < n; ++i) sine[i] = std::sqrt(1.0 - s.values[i] * s.values[i]);

    for (std::size_t i = 0; i < n; ++i) {
        img.at(i, i) = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            // sin(phi_i - phi_j), guarded like gasf
            const double v =
                std::clamp(sine[i] * s.values[j] - s.values[i] * sine[j], -1.0, 1.0);
            img.at(i, j) = v;
            img.at(j, i) = -v;
        }
    }
    return img;
}

std::vector<double> paa_downsample(const std::vector<double>& x, std::size_t target_n) {
    if (target_n == 0) throw ConfigError("PAA target must be >= 1");
    if (target_n > x.size()) throw TargetTooLarge(target_n, x.size());

    std::vector<double> out(target_n);
    const std::size_t n = x.size();
    for (std::size_t k = 0; k < target_n; ++k) {
        const std::size_t begin = k * n / target_n;
        const std::size_t end = (k + 1) * n / target_n;
        double acc = 0.0;
        for (std::size_t i = begin; i < end; ++i) acc += x[i];
        out[k] = acc / static_cast<double>(end - begin);
    }
    return out;
}

void export_image(const GafImage& img, const std::string& csv_path, const std::string& pgm_path) {
    {
        std::ofstream out(csv_path);
        if (!out) throw IoError("cannot write " + csv_path);
        for (std::size_t i = 0; i < img.n; ++i) {
            for (std::size_t j = 0; j < img.n; ++j) {
                if (j) out << ',';
                out << csv::format_double(img.at(i, j));
            }
            out << '\n';
        }
        if (!out) throw IoError("write failed: " + csv_path);
    }
    {
        std::ofstream out(pgm_path);
        if (!out) throw IoError("cannot write " + pgm_path);
        out << "P2\n" << img.n << ' ' << img.n << "\n255\n";
        for (std::size_t i = 0; i < img.n; ++i) {
            for (std::size_t j = 0; j < img.n; ++j) {
                const double v = std::clamp(img.at(i, j), -1.0, 1.0);
                const int pixel = static_cast<int>(std::floor((v + 1.0) / 2.0 * 255.0 + 0.5));
                if (j) out << ' ';
                out << pixel;
            }
            out << '\n';
        }
        if (!out) throw IoError("write failed: " + pgm_path);
    }
}

GafImage import_image_csv(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw IoError("cannot open " + csv_path);
    GafImage img;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = csv::split_line(line);
        for (const auto& cell : cells) {
            try {
                img.matrix.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw DataError(csv_path + ": non-numeric cell \"" + cell + "\"");
            }
        }
        if (img.n == 0) img.n = cells.size();
        else if (cells.size() != img.n) throw DataError(csv_path + ": ragged rows");
    }
    if (img.matrix.size() != img.n * img.n) throw DataError(csv_path + ": matrix is not square");
    return img;
}

}  // namespace nirsgaf::gaf
