#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "forma/corpus.hpp"
#include "forma/error.hpp"
#include "forma/io.hpp"
#include "forma/text.hpp"

namespace forma {

struct Triplet {
    std::string source;
    std::string target_a;
    std::string target_b;
    Formality label_a = Formality::None;
    Formality label_b = Formality::None;
};

struct TripletCorpus {
    std::vector<Triplet> triplets;
    double coverage_a = 0;  // matched / |a|
    double coverage_b = 0;
    int64_t dropped_duplicates_a = 0;  // later occurrences of a repeated source
    int64_t dropped_duplicates_b = 0;
};

// Joins two labeled corpora on the whitespace-normalized source string.
// Repeated sources inside one corpus keep their first occurrence; the drop
// counts record how many later occurrences were discarded. Triplet order
// follows corpus a.
inline TripletCorpus intersect_on_source(const LabeledCorpus& a, const LabeledCorpus& b) {
    struct Entry {
        const LabeledPair* pair;
    };
    std::unordered_map<std::string, Entry> b_by_source;
    b_by_source.reserve(b.pairs.size());
    int64_t dropped_b = 0;
    for (const auto& lp : b.pairs) {
        std::string key = collapse_whitespace(lp.pair.source);
        if (!b_by_source.emplace(std::move(key), Entry{&lp}).second) ++dropped_b;
    }
    TripletCorpus out;
    std::unordered_map<std::string, char> seen_a;
    seen_a.reserve(a.pairs.size());
    for (const auto& lp : a.pairs) {
        std::string key = collapse_whitespace(lp.pair.source);
        if (!seen_a.emplace(key, 1).second) {
            ++out.dropped_duplicates_a;
            continue;
        }
        auto it = b_by_source.find(key);
        if (it == b_by_source.end()) continue;
        Triplet t;
        t.source = lp.pair.source;
        t.target_a = lp.pair.target;
        t.target_b = it->second.pair->pair.target;
        t.label_a = lp.label;
        t.label_b = it->second.pair->label;
        out.triplets.push_back(std::move(t));
    }
    out.dropped_duplicates_b = dropped_b;
    out.coverage_a = a.pairs.empty()
                         ? 0.0
                         : static_cast<double>(out.triplets.size()) / static_cast<double>(a.pairs.size());
    out.coverage_b = b.pairs.empty()
                         ? 0.0
                         : static_cast<double>(out.triplets.size()) / static_cast<double>(b.pairs.size());
    return out;
}

// Tabulation of label combinations across the two target languages.
// "Annotated" means at least one side carries a label.
struct CombinationStats {
    // counts[a][b] indexed by Formality (Formal=0, Informal=1, None=2)
    std::array<std::array<int64_t, 3>, 3> counts{};
    int64_t total = 0;

    int64_t count(Formality a, Formality b) const {
        return counts[static_cast<size_t>(a)][static_cast<size_t>(b)];
    }

    int64_t annotated_total() const {
        return total - count(Formality::None, Formality::None);
    }

    int64_t both_annotated() const {
        int64_t n = 0;
        for (Formality a : {Formality::Formal, Formality::Informal})
            for (Formality b : {Formality::Formal, Formality::Informal}) n += count(a, b);
        return n;
    }

    // percentage of the annotated base; empty when nothing is annotated
    std::optional<double> percent(Formality a, Formality b) const {
        int64_t base = annotated_total();
        if (base == 0) return std::nullopt;
        return 100.0 * static_cast<double>(count(a, b)) / static_cast<double>(base);
    }

    std::optional<double> both_annotated_fraction() const {
        int64_t base = annotated_total();
        if (base == 0) return std::nullopt;
        return static_cast<double>(both_annotated()) / static_cast<double>(base);
    }

    // agreement among the both-annotated triplets
    std::optional<double> agreement_fraction() const {
        int64_t both = both_annotated();
        if (both == 0) return std::nullopt;
        int64_t agree = count(Formality::Formal, Formality::Formal) +
                        count(Formality::Informal, Formality::Informal);
        return static_cast<double>(agree) / static_cast<double>(both);
    }
};

inline CombinationStats combination_stats(const TripletCorpus& t) {
    CombinationStats stats;
    stats.total = static_cast<int64_t>(t.triplets.size());
    for (const auto& trip : t.triplets)
        ++stats.counts[static_cast<size_t>(trip.label_a)][static_cast<size_t>(trip.label_b)];
    return stats;
}

inline std::string combination_symbol(Formality f) {
    if (f == Formality::Formal) return "F";
    if (f == Formality::Informal) return "I";
    return "∅";
}

// Row order mirrors the combination table layout: matched labels first,
// then crossed, then half-annotated.
inline const std::array<std::pair<Formality, Formality>, 8>& combination_rows() {
    static const std::array<std::pair<Formality, Formality>, 8> rows = {{
        {Formality::Formal, Formality::Formal},
        {Formality::Informal, Formality::Informal},
        {Formality::Formal, Formality::Informal},
        {Formality::Informal, Formality::Formal},
        {Formality::Formal, Formality::None},
        {Formality::Informal, Formality::None},
        {Formality::None, Formality::Formal},
        {Formality::None, Formality::Informal},
    }};
    return rows;
}

// Human-readable table, one "A B count pct%" row per combination.
inline std::vector<std::string> render_combination_table(const CombinationStats& stats) {
    std::vector<std::string> lines;
    for (const auto& [a, b] : combination_rows()) {
        std::string line = combination_symbol(a) + " " + combination_symbol(b) + " " +
                           std::to_string(stats.count(a, b)) + " ";
        auto pct = stats.percent(a, b);
        line += pct ? fmt_fixed(*pct, 2) + "%" : "-";
        lines.push_back(std::move(line));
    }
    lines.push_back("annotated_total " + std::to_string(stats.annotated_total()));
    auto both = stats.both_annotated_fraction();
    lines.push_back("both_annotated " + std::to_string(stats.both_annotated()) + " " +
                    (both ? fmt_fixed(*both * 100.0, 2) + "%" : "-"));
    auto agree = stats.agreement_fraction();
    lines.push_back("agreement " + (agree ? fmt_fixed(*agree * 100.0, 2) + "%" : "-"));
    return lines;
}

// Combination stats as TSV rows: label_a, label_b, count, percent.
inline std::vector<std::string> combination_stats_tsv(const CombinationStats& stats) {
    std::vector<std::string> lines;
    for (const auto& [a, b] : combination_rows()) {
        std::string line(1, formality_char(a));
        line += '\t';
        line += formality_char(b);
        line += '\t';
        line += std::to_string(stats.count(a, b));
        line += '\t';
        auto pct = stats.percent(a, b);
        line += pct ? fmt_real(*pct) : "-";
        lines.push_back(std::move(line));
    }
    return lines;
}

struct PivotSeeds {
    std::vector<std::string> formal_sources;    // sources labeled formal in both
    std::vector<std::string> informal_sources;  // sources labeled informal in both
};

// Sources whose two translations agree on a label become in-domain seeds
// for source-side ranking of a zero-shot pair. Order follows the triplets.
inline PivotSeeds pivot_in_domain_sets(const TripletCorpus& t) {
    PivotSeeds seeds;
    for (const auto& trip : t.triplets) {
        if (trip.label_a == Formality::Formal && trip.label_b == Formality::Formal)
            seeds.formal_sources.push_back(trip.source);
        else if (trip.label_a == Formality::Informal && trip.label_b == Formality::Informal)
            seeds.informal_sources.push_back(trip.source);
    }
    return seeds;
}

// Triplet TSV: source, target_a, target_b, label_a, label_b.
inline void write_triplets_tsv(const TripletCorpus& t, const std::string& path) {
    std::vector<std::string> lines;
    lines.reserve(t.triplets.size());
    for (const auto& trip : t.triplets) {
        std::string line = trip.source;
        line += '\t';
        line += trip.target_a;
        line += '\t';
        line += trip.target_b;
        line += '\t';
        line += formality_char(trip.label_a);
        line += '\t';
        line += formality_char(trip.label_b);
        lines.push_back(std::move(line));
    }
    write_lines(path, lines);
}

inline TripletCorpus read_triplets_tsv(const std::string& path) {
    TripletCorpus t;
    std::vector<std::string> lines = read_lines(path);
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::vector<std::string> f = split_tsv(lines[i]);
        if (f.size() != 5)
            throw DataError(path + ":" + std::to_string(i + 1) + ": expected 5 columns");
        if (f[3].size() != 1 || f[4].size() != 1)
            throw DataError(path + ":" + std::to_string(i + 1) + ": bad label column");
        Triplet trip;
        trip.source = escape_reserved(f[0]);
        trip.target_a = escape_reserved(f[1]);
        trip.target_b = escape_reserved(f[2]);
        trip.label_a = formality_from_char(f[3][0]);
        trip.label_b = formality_from_char(f[4][0]);
        t.triplets.push_back(std::move(trip));
    }
    return t;
}

}  // namespace forma
