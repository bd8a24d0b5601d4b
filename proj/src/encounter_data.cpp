#include "closedpop/encounter_data.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace closedpop {

bool EncounterHistory::observed() const {
    return std::any_of(entries.begin(), entries.end(), [](int e) { return e != 0; });
}

int EncounterHistory::first_capture() const {
    for (std::size_t t = 0; t < entries.size(); ++t)
        if (entries[t] != 0) return static_cast<int>(t);
    return -1;
}

namespace {

std::vector<int> parse_line(const std::string& line, int R, int lineno) {
    std::string cleaned = line;
    std::replace(cleaned.begin(), cleaned.end(), ',', ' ');

    const bool has_space =
        std::any_of(cleaned.begin(), cleaned.end(), [](unsigned char ch) { return std::isspace(ch); });
    std::vector<int> entries;

    if (!has_space && cleaned.size() > 1 && R <= 9) {
        // Compact digit-run form, one occasion per character.
        for (char ch : cleaned) {
            if (!std::isdigit(static_cast<unsigned char>(ch)))
                throw std::invalid_argument("line " + std::to_string(lineno) +
                                            ": unexpected character '" + std::string(1, ch) + "'");
            entries.push_back(ch - '0');
        }
    } else {
        std::istringstream ss(cleaned);
        std::string tok;
        while (ss >> tok) {
            std::size_t pos = 0;
            int value = 0;
            try {
                value = std::stoi(tok, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos != tok.size())
                throw std::invalid_argument("line " + std::to_string(lineno) +
                                            ": not an integer: '" + tok + "'");
            entries.push_back(value);
        }
    }

    for (int e : entries) {
        if (e < 0 || e > R)
            throw std::invalid_argument("line " + std::to_string(lineno) + ": state " +
                                        std::to_string(e) + " outside [0," + std::to_string(R) + "]");
    }
    return entries;
}

}  // namespace

Dataset parse_dataset(std::istream& in, int R) {
    if (R < 1) throw std::invalid_argument("R must be >= 1");
    Dataset d;
    d.R = R;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r\n,") == std::string::npos) continue;
        std::vector<int> entries = parse_line(line, R, lineno);
        if (d.T == 0) {
            d.T = static_cast<int>(entries.size());
        } else if (static_cast<int>(entries.size()) != d.T) {
            throw std::invalid_argument("line " + std::to_string(lineno) + ": expected " +
                                        std::to_string(d.T) + " entries, got " +
                                        std::to_string(entries.size()));
        }
        EncounterHistory h{std::move(entries)};
        if (!h.observed())
            throw std::invalid_argument("line " + std::to_string(lineno) +
                                        ": all-zero history; unobserved individuals are modelled "
                                        "through N, not data rows");
        d.histories.push_back(std::move(h));
    }
    if (d.histories.empty()) throw std::invalid_argument("empty input: no encounter histories");
    return d;
}

Dataset parse_dataset(const std::string& text, int R) {
    std::istringstream ss(text);
    return parse_dataset(ss, R);
}

void validate_dataset(const Dataset& d) {
    if (d.T < 1) throw std::invalid_argument("dataset has no occasions");
    if (d.R < 1) throw std::invalid_argument("R must be >= 1");
    if (d.histories.empty()) throw std::invalid_argument("dataset has no histories");
    for (const auto& h : d.histories) {
        if (static_cast<int>(h.entries.size()) != d.T)
            throw std::invalid_argument("history length differs from dataset T");
        if (!h.observed()) throw std::invalid_argument("all-zero history");
        for (int e : h.entries)
            if (e < 0 || e > d.R) throw std::invalid_argument("state label outside [0,R]");
    }
}

std::string format_dataset(const Dataset& d) {
    std::string out;
    for (const auto& h : d.histories) {
        for (int t = 0; t < d.T; ++t) {
            if (t > 0) out += ' ';
            out += std::to_string(h.entries[t]);
        }
        out += '\n';
    }
    return out;
}

int SufficientStats::pair_at(int t1, int t2, int r, int s) const {
    auto it = pairs.find(PairCell{t1, t2, r, s});
    return it == pairs.end() ? 0 : it->second;
}

int SufficientStats::inflow(int t, int r) const {
    int m = z_at(t, r);
    for (const auto& [cell, count] : pairs)
        if (cell.t2 == t && cell.s == r) m += count;
    return m;
}

SufficientStats sufficient_stats(const Dataset& d) {
    validate_dataset(d);
    SufficientStats st;
    st.T = d.T;
    st.R = d.R;
    st.n = d.n();
    st.z.assign(static_cast<std::size_t>(d.T) * d.R, 0);
    st.v.assign(static_cast<std::size_t>(std::max(d.T - 1, 0)) * d.R, 0);
    st.single.f.assign(d.T, 0);
    st.single.n_t.assign(d.T, 0);
    st.single.z_t.assign(d.T, 0);

    for (const auto& h : d.histories) {
        // (occasion, state) capture events, 0-based occasions, 0-based states.
        std::vector<std::pair<int, int>> caps;
        for (int t = 0; t < d.T; ++t)
            if (h.entries[t] != 0) caps.emplace_back(t, h.entries[t] - 1);

        const auto [t_first, r_first] = caps.front();
        st.z[static_cast<std::size_t>(t_first) * d.R + r_first] += 1;
        st.single.z_t[t_first] += 1;
        st.single.y += t_first;

        for (std::size_t i = 0; i + 1 < caps.size(); ++i) {
            const auto [t1, r] = caps[i];
            const auto [t2, s] = caps[i + 1];
            st.pairs[PairCell{t1, t2, r, s}] += 1;
        }

        const auto [t_last, r_last] = caps.back();
        if (t_last < d.T - 1) st.v[static_cast<std::size_t>(t_last) * d.R + r_last] += 1;

        st.single.f[caps.size() - 1] += 1;
        for (const auto& [t, r] : caps) st.single.n_t[t] += 1;
        st.single.captures += static_cast<long long>(caps.size());
    }
    return st;
}

}  // namespace closedpop
