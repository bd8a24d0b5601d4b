#pragma once

#include <compare>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace closedpop {

// One individual's record over the T occasions of a study.
// entries[t] == 0 means not captured at occasion t; r in 1..R means captured in
// state r. A history with no captures at all is invalid input.
struct EncounterHistory {
    std::vector<int> entries;

    bool observed() const;
    // 0-based occasion of the first capture, or -1 when unobserved.
    int first_capture() const;
};

struct Dataset {
    int T = 0;
    int R = 0;
    std::vector<EncounterHistory> histories;

    int n() const { return static_cast<int>(histories.size()); }
};

// Reads encounter histories, one per line. Entries may be separated by
// whitespace or commas; when R <= 9 a line may also be a single run of digits
// ("100320"). T is taken from the first non-empty line. Throws
// std::invalid_argument on ragged rows, entries outside [0,R], all-zero rows,
// or empty input.
Dataset parse_dataset(std::istream& in, int R);
Dataset parse_dataset(const std::string& text, int R);

// Checks the Dataset invariants; throws std::invalid_argument on violation.
void validate_dataset(const Dataset& d);

// One line per history, entries space-separated.
std::string format_dataset(const Dataset& d);

// Cell index for a next-capture count: observed at occasion t1 in state r, next
// observed at t2 > t1 in state s. Occasions and states are 0-based here.
struct PairCell {
    int t1 = 0;
    int t2 = 0;
    int r = 0;
    int s = 0;

    auto operator<=>(const PairCell&) const = default;
};

// State-blind reductions of the data.
struct SingleStateStats {
    std::vector<int> f;    // Schnabel census: f[j-1] individuals caught on exactly j occasions
    std::vector<int> n_t;  // captures per occasion
    std::vector<int> z_t;  // first captures per occasion
    long long y = 0;       // occasions elapsed before first capture, summed over individuals
    long long captures = 0;  // total capture events, equals sum of n_t
};

// Minimal counts the likelihood needs: first captures z, next-capture pairs,
// last captures v, and the single-state reductions.
struct SufficientStats {
    int T = 0;
    int R = 0;
    int n = 0;
    std::vector<int> z;             // T x R, z[t*R + r]
    std::map<PairCell, int> pairs;  // zero cells absent
    std::vector<int> v;             // (T-1) x R; final-occasion last captures are implicit
    SingleStateStats single;

    int z_at(int t, int r) const { return z[static_cast<std::size_t>(t) * R + r]; }
    int v_at(int t, int r) const { return v[static_cast<std::size_t>(t) * R + r]; }
    int pair_at(int t1, int t2, int r, int s) const;
    // Individuals observed at (t, r): first captures plus arriving recaptures.
    int inflow(int t, int r) const;
};

SufficientStats sufficient_stats(const Dataset& d);

}  // namespace closedpop
