#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rydberg/error.hpp"
#include "rydberg/units.hpp"

namespace rydberg {

/// B independent of separation. B = +inf is the perfect-blockade limit.
struct ConstantBlockade {
    double shift = 0.0;  // rad/s
    bool operator==(const ConstantBlockade &) const = default;
};

/// B(R) = C6 / R^6.
struct VanDerWaalsBlockade {
    double c6 = 0.0;  // rad/s m^6
    bool operator==(const VanDerWaalsBlockade &) const = default;
};

struct BlockadeSample {
    double separation;  // m
    double shift;       // rad/s
    bool operator==(const BlockadeSample &) const = default;
};

/// Sampled B(R), interpolated linearly in (log R, log B). No extrapolation.
struct TabulatedBlockade {
    std::vector<BlockadeSample> samples;
    std::string source;  // file the samples came from, if any
    bool operator==(const TabulatedBlockade &) const = default;
};

using BlockadeModel = std::variant<ConstantBlockade, VanDerWaalsBlockade, TabulatedBlockade>;

inline void validate(const BlockadeModel &model) {
    std::visit(
        [](const auto &m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ConstantBlockade>) {
                detail::require_positive(m.shift, "blockade.shift_mhz");
            } else if constexpr (std::is_same_v<T, VanDerWaalsBlockade>) {
                detail::require_positive(m.c6, "blockade.c6_ghz_um6");
                if (!std::isfinite(m.c6)) {
                    throw ValidationError("blockade.c6_ghz_um6", "must be finite");
                }
            } else {
                if (m.samples.size() < 2) {
                    throw ValidationError("blockade.table", "needs at least two samples");
                }
                for (std::size_t i = 0; i < m.samples.size(); ++i) {
                    const auto &s = m.samples[i];
                    if (!(s.separation > 0.0) || !(s.shift > 0.0) || !std::isfinite(s.shift)) {
                        throw ValidationError("blockade.table",
                                              "row " + std::to_string(i) + " must have R > 0 and finite B > 0");
                    }
                    if (i > 0 && !(s.separation > m.samples[i - 1].separation)) {
                        throw ValidationError("blockade.table", "separations must be strictly increasing");
                    }
                }
            }
        },
        model);
}

inline double blockade_shift(const BlockadeModel &model, double separation) {
    detail::require_positive(separation, "geometry.separation_um");
    return std::visit(
        [separation](const auto &m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ConstantBlockade>) {
                return m.shift;
            } else if constexpr (std::is_same_v<T, VanDerWaalsBlockade>) {
                const double r3 = separation * separation * separation;
                return m.c6 / (r3 * r3);
            } else {
                const auto &s = m.samples;
                if (separation < s.front().separation || separation > s.back().separation) {
                    throw ValidationError("geometry.separation_um",
                                          "R = " + std::to_string(units::m_to_um(separation)) +
                                              " um is outside the tabulated range [" +
                                              std::to_string(units::m_to_um(s.front().separation)) + ", " +
                                              std::to_string(units::m_to_um(s.back().separation)) + "] um");
                }
                auto hi = std::lower_bound(s.begin(), s.end(), separation,
                                           [](const BlockadeSample &a, double r) { return a.separation < r; });
                if (hi->separation == separation) {
                    return hi->shift;
                }
                auto lo = std::prev(hi);
                const double u = std::log(separation / lo->separation) / std::log(hi->separation / lo->separation);
                return std::exp((1.0 - u) * std::log(lo->shift) + u * std::log(hi->shift));
            }
        },
        model);
}

/// Rabi frequency between |g...g> and the symmetric single-excitation state
/// of N fully blockaded atoms.
inline double collective_rabi(int atom_count, double rabi) {
    if (atom_count < 1) {
        throw ValidationError("N", "atom count must be >= 1");
    }
    detail::require_positive(rabi, "Omega");
    return std::sqrt(static_cast<double>(atom_count)) * rabi;
}

/// Van der Waals model whose shift equals `shift` at `separation`.
inline VanDerWaalsBlockade vdw_anchored(double shift, double separation) {
    return VanDerWaalsBlockade{shift * std::pow(separation, 6)};
}

/// Two-column CSV: R in um, B/2pi in MHz. Lines starting with '#' and a
/// non-numeric header line are skipped.
inline TabulatedBlockade parse_blockade_table(std::istream &in, std::string source = {}) {
    TabulatedBlockade table;
    table.source = std::move(source);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') {
            continue;
        }
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double r_um = 0.0, b_mhz = 0.0;
        if (!(row >> r_um >> b_mhz)) {
            if (table.samples.empty() && std::isalpha(static_cast<unsigned char>(line[first]))) {
                continue;  // header
            }
            throw ValidationError("blockade.table", "line " + std::to_string(line_no) + " is not 'R_um,B_MHz'");
        }
        table.samples.push_back({units::um_to_m(r_um), units::mhz_to_rad(b_mhz)});
    }
    BlockadeModel check = table;
    validate(check);
    return table;
}

inline TabulatedBlockade load_blockade_table(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("blockade.table", "cannot open '" + path + "'");
    }
    return parse_blockade_table(in, path);
}

}  // namespace rydberg
