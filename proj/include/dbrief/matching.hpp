#pragma once

#include <limits>
#include <string>
#include <vector>

#include "dbrief/descriptor.hpp"

namespace dbrief {

struct Match {
    int index_i = -1;
    int index_j = -1;
    double distance = 0.0;  // bits for plain Hamming, [0, 2] for masked
};

struct MatchOptions {
    bool masked = false;
    double threshold = std::numeric_limits<double>::infinity();
    bool cross_check = false;
    int threads = 1;
};

// popcount(bits_i XOR bits_j); padding bits never contribute.
int hamming(const BinaryDescriptor& a, const BinaryDescriptor& b);

// (1/o_i)|l_i & x| + (1/o_j)|l_j & x| with x = bits_i XOR bits_j.
double masked_hamming(const BinaryDescriptor& a, const BinaryDescriptor& b);

// Nearest neighbor per query (ties to the lowest target index), optional
// distance threshold and cross-check. Output sorted by query index.
std::vector<Match> match_brute_force(const std::vector<BinaryDescriptor>& set_i,
                                     const std::vector<BinaryDescriptor>& set_j,
                                     const MatchOptions& options);

// CSV `index_i,index_j,distance`.
void write_matches(const std::vector<Match>& matches, const std::string& path);
std::vector<Match> read_matches(const std::string& path);

}  // namespace dbrief
