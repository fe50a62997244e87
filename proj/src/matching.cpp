#include "dbrief/matching.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "dbrief/common.hpp"

namespace dbrief {

int hamming(const BinaryDescriptor& a, const BinaryDescriptor& b) {
    if (a.dim != b.dim) throw DomainError("hamming: descriptor dimension mismatch");
    int n = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) n += std::popcount(a.bits[i] ^ b.bits[i]);
    return n;
}

double masked_hamming(const BinaryDescriptor& a, const BinaryDescriptor& b) {
    if (a.dim != b.dim) throw DomainError("masked_hamming: descriptor dimension mismatch");
    if (!a.has_mask() || !b.has_mask())
        throw DomainError("masked_hamming: both descriptors need masks");
    int na = 0, nb = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        const std::uint64_t x = a.bits[i] ^ b.bits[i];
        na += std::popcount(a.mask[i] & x);
        nb += std::popcount(b.mask[i] & x);
    }
    return static_cast<double>(na) / a.mask_ones + static_cast<double>(nb) / b.mask_ones;
}

std::vector<Match> match_brute_force(const std::vector<BinaryDescriptor>& set_i,
                                     const std::vector<BinaryDescriptor>& set_j,
                                     const MatchOptions& options) {
    if (set_i.empty() || set_j.empty())
        throw DomainError("match_brute_force: descriptor sets must be non-empty");
    const int dim = set_i.front().dim;
    auto check_set = [&](const std::vector<BinaryDescriptor>& s, const char* name) {
        for (const auto& d : s) {
            if (d.dim != dim) throw DomainError(std::string("match_brute_force: mixed dimensions in ") + name);
            if (options.masked && !d.has_mask())
                throw DomainError(std::string("match_brute_force: masked matching but descriptor without mask in ") + name);
        }
    };
    check_set(set_i, "set_i");
    check_set(set_j, "set_j");

    auto dist = [&](const BinaryDescriptor& a, const BinaryDescriptor& b) {
        return options.masked ? masked_hamming(a, b) : static_cast<double>(hamming(a, b));
    };

    // nearest target per query; ties to lowest index
    std::vector<int> best_j(set_i.size(), -1);
    std::vector<double> best_d(set_i.size(), 0.0);
    parallel_for(set_i.size(), options.threads, [&](std::size_t i) {
        int bj = 0;
        double bd = dist(set_i[i], set_j[0]);
        for (std::size_t j = 1; j < set_j.size(); ++j) {
            const double d = dist(set_i[i], set_j[j]);
            if (d < bd) {
                bd = d;
                bj = static_cast<int>(j);
            }
        }
        best_j[i] = bj;
        best_d[i] = bd;
    });

    std::vector<int> reverse_best;
    if (options.cross_check) {
        reverse_best.assign(set_j.size(), -1);
        parallel_for(set_j.size(), options.threads, [&](std::size_t j) {
            int bi = 0;
            double bd = dist(set_j[j], set_i[0]);
            for (std::size_t i = 1; i < set_i.size(); ++i) {
                const double d = dist(set_j[j], set_i[i]);
                if (d < bd) {
                    bd = d;
                    bi = static_cast<int>(i);
                }
            }
            reverse_best[j] = bi;
        });
    }

    std::vector<Match> matches;
    for (std::size_t i = 0; i < set_i.size(); ++i) {
        if (best_d[i] > options.threshold) continue;
        if (options.cross_check && reverse_best[static_cast<std::size_t>(best_j[i])] != static_cast<int>(i))
            continue;
        matches.push_back({static_cast<int>(i), best_j[i], best_d[i]});
    }
    return matches;
}

void write_matches(const std::vector<Match>& matches, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path);
    out << "index_i,index_j,distance\n";
    for (const auto& m : matches)
        out << m.index_i << "," << m.index_j << "," << format_real(m.distance) << "\n";
}

std::vector<Match> read_matches(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open match file: " + path);
    std::string line;
    std::getline(in, line);
    if (line != "index_i,index_j,distance") throw ParseError(path + ": bad match CSV header");
    std::vector<Match> matches;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Match m;
        char c1, c2;
        std::istringstream ss(line);
        if (!(ss >> m.index_i >> c1 >> m.index_j >> c2 >> m.distance) || c1 != ',' || c2 != ',')
            throw ParseError(path + ": malformed match line: " + line);
        matches.push_back(m);
    }
    return matches;
}

}  // namespace dbrief
