#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "forma/corpus.hpp"
#include "forma/error.hpp"
#include "forma/lm.hpp"

namespace forma {

// Per-pair positions in the formal- and informal-sorted rankings. Lower
// position means more like that register's seed data. Both position arrays
// are permutations of 0..size-1.
struct RankedCorpus {
    std::vector<int64_t> f_pos;  // indexed by pair index
    std::vector<int64_t> i_pos;

    int64_t size() const { return static_cast<int64_t>(f_pos.size()); }
};

inline void validate_permutation(const std::vector<int64_t>& pos, std::string_view what) {
    std::vector<char> seen(pos.size(), 0);
    for (int64_t p : pos) {
        if (p < 0 || p >= static_cast<int64_t>(pos.size()) || seen[static_cast<size_t>(p)])
            throw DataError(std::string(what) + ": positions are not a permutation of 0.." +
                            std::to_string(pos.size() ? pos.size() - 1 : 0));
        seen[static_cast<size_t>(p)] = 1;
    }
}

// Builds the per-pair position table from two rank-ordered score sequences
// (row r of a ranking holds the pair whose position is r).
inline RankedCorpus ranked_corpus_from_scores(const std::vector<PerplexityScore>& formal_ranking,
                                              const std::vector<PerplexityScore>& informal_ranking) {
    if (formal_ranking.size() != informal_ranking.size())
        throw DataError("rankings disagree on corpus size: " +
                        std::to_string(formal_ranking.size()) + " vs " +
                        std::to_string(informal_ranking.size()));
    const size_t n = formal_ranking.size();
    RankedCorpus rc;
    rc.f_pos.assign(n, -1);
    rc.i_pos.assign(n, -1);
    for (size_t r = 0; r < n; ++r) {
        int64_t fi = formal_ranking[r].pair_index;
        int64_t ii = informal_ranking[r].pair_index;
        if (fi < 0 || fi >= static_cast<int64_t>(n) || ii < 0 || ii >= static_cast<int64_t>(n))
            throw DataError("ranking refers to pair index outside corpus");
        rc.f_pos[static_cast<size_t>(fi)] = static_cast<int64_t>(r);
        rc.i_pos[static_cast<size_t>(ii)] = static_cast<int64_t>(r);
    }
    validate_permutation(rc.f_pos, "formal ranking");
    validate_permutation(rc.i_pos, "informal ranking");
    return rc;
}

struct CalibrationPoint {
    int64_t candidate = 0;
    double objective = 0;  // mean in-domain perplexity; meaningless when skipped
    int64_t formal_count = 0;
    int64_t informal_count = 0;
    bool skipped = false;
};

struct SelectionReport {
    std::string mode;  // "easy" or "full"
    int64_t corpus_size = 0;
    int64_t threshold = 0;           // theta or alpha, in rank space
    double threshold_fraction = 0;   // threshold / corpus size
    int64_t formal_count = 0;
    int64_t informal_count = 0;
    int64_t none_count = 0;
    std::vector<CalibrationPoint> trace;

    std::vector<std::string> render() const {
        std::vector<std::string> lines;
        lines.push_back("mode=" + mode);
        lines.push_back("corpus_size=" + std::to_string(corpus_size));
        if (mode == "easy") {
            lines.push_back("theta=" + std::to_string(threshold));
            lines.push_back("theta_fraction=" + fmt_fixed(threshold_fraction, 2) + "C");
        } else {
            lines.push_back("alpha=" + std::to_string(threshold));
            lines.push_back("alpha_fraction=" + fmt_fixed(threshold_fraction, 2) + "C");
        }
        lines.push_back("formal_count=" + std::to_string(formal_count));
        lines.push_back("informal_count=" + std::to_string(informal_count));
        lines.push_back("none_count=" + std::to_string(none_count));
        for (size_t i = 0; i < trace.size(); ++i) {
            const auto& p = trace[i];
            std::string line = "trace." + std::to_string(i) + "=candidate:" +
                               std::to_string(p.candidate);
            if (p.skipped) {
                line += " skipped:empty";
            } else {
                line += " objective:" + fmt_real(p.objective);
            }
            line += " formal:" + std::to_string(p.formal_count) +
                    " informal:" + std::to_string(p.informal_count);
            lines.push_back(std::move(line));
        }
        return lines;
    }
};

// Absolute-threshold rule: a pair is labeled only when it sits strictly
// inside the top theta of one ranking and strictly outside it on the other.
inline Formality easy_label(int64_t f_pos, int64_t i_pos, int64_t theta) {
    if (f_pos < theta && theta < i_pos) return Formality::Formal;
    if (i_pos < theta && theta < f_pos) return Formality::Informal;
    return Formality::None;
}

// Relative position difference rule: labeled formal when the pair ranks
// better on the formal list by more than alpha positions, and conversely.
inline Formality full_label(int64_t f_pos, int64_t i_pos, int64_t alpha) {
    if (i_pos - f_pos > alpha) return Formality::Formal;
    if (f_pos - i_pos > alpha) return Formality::Informal;
    return Formality::None;
}

inline std::vector<Formality> label_easy(const RankedCorpus& ranks, int64_t theta) {
    if (theta < 0 || theta >= ranks.size())
        throw UsageError("assign_easy: theta " + std::to_string(theta) +
                         " outside [0, " + std::to_string(ranks.size()) + ")");
    std::vector<Formality> labels(ranks.f_pos.size());
    for (size_t i = 0; i < labels.size(); ++i)
        labels[i] = easy_label(ranks.f_pos[i], ranks.i_pos[i], theta);
    return labels;
}

inline std::vector<Formality> label_full(const RankedCorpus& ranks, int64_t alpha) {
    if (alpha < 0) throw UsageError("assign_full: alpha must be >= 0");
    std::vector<Formality> labels(ranks.f_pos.size());
    for (size_t i = 0; i < labels.size(); ++i)
        labels[i] = full_label(ranks.f_pos[i], ranks.i_pos[i], alpha);
    return labels;
}

inline LabeledCorpus zip_labels(const ParallelCorpus& corpus, const std::vector<Formality>& labels) {
    if (corpus.size() != labels.size())
        throw DataError("label vector does not match corpus size");
    LabeledCorpus out;
    out.pairs.reserve(corpus.size());
    for (size_t i = 0; i < labels.size(); ++i) out.pairs.push_back({corpus.pairs[i], labels[i]});
    return out;
}

inline LabeledCorpus assign_easy(const RankedCorpus& ranks, const ParallelCorpus& corpus,
                                 int64_t theta) {
    return zip_labels(corpus, label_easy(ranks, theta));
}

inline LabeledCorpus assign_full(const RankedCorpus& ranks, const ParallelCorpus& corpus,
                                 int64_t alpha) {
    return zip_labels(corpus, label_full(ranks, alpha));
}

inline int64_t labeled_count(const std::vector<Formality>& labels) {
    int64_t n = 0;
    for (Formality f : labels)
        if (f != Formality::None) ++n;
    return n;
}

// Fractions are rounded half-up into rank space.
inline int64_t fraction_to_rank(double fraction, int64_t corpus_size) {
    return static_cast<int64_t>(std::floor(fraction * static_cast<double>(corpus_size) + 0.5));
}

struct ThetaChoice {
    int64_t theta = 0;
    double fraction = 0;
    int64_t labeled = 0;
    SelectionReport report;
};

// Picks the theta that yields the most labeled data; ties go to the
// smaller theta.
inline ThetaChoice choose_theta(const RankedCorpus& ranks, const std::vector<double>& grid) {
    if (grid.empty()) throw UsageError("choose_theta: empty grid");
    if (ranks.size() == 0) throw UsageError("choose_theta: empty corpus");
    for (double g : grid)
        if (g < 0.0 || g >= 1.0) throw UsageError("choose_theta: grid fractions must be in [0,1)");
    std::vector<int64_t> candidates;
    for (double g : grid) {
        int64_t t = fraction_to_rank(g, ranks.size());
        t = std::clamp<int64_t>(t, 0, ranks.size() - 1);
        candidates.push_back(t);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    int64_t best_theta = candidates.front();
    int64_t best_labeled = -1;
    ThetaChoice choice;
    for (int64_t t : candidates) {
        std::vector<Formality> labels = label_easy(ranks, t);
        CalibrationPoint p;
        p.candidate = t;
        for (Formality f : labels) {
            if (f == Formality::Formal) ++p.formal_count;
            if (f == Formality::Informal) ++p.informal_count;
        }
        int64_t n = p.formal_count + p.informal_count;
        p.objective = static_cast<double>(n);
        choice.report.trace.push_back(p);
        if (n > best_labeled) {
            best_labeled = n;
            best_theta = t;
        }
    }
    choice.theta = best_theta;
    choice.fraction = static_cast<double>(best_theta) / static_cast<double>(ranks.size());
    choice.labeled = best_labeled;
    choice.report.mode = "easy";
    choice.report.corpus_size = ranks.size();
    choice.report.threshold = best_theta;
    choice.report.threshold_fraction = choice.fraction;
    return choice;
}

inline std::vector<double> default_theta_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 19; ++i) grid.push_back(0.05 * i);
    return grid;
}

struct AlphaCalibration {
    int64_t alpha = 0;
    SelectionReport report;
};

// Sweeps alpha over an even grid between the lower and upper bound
// fractions of the corpus size. Each candidate labels the corpus, trains a
// model on the combined F+I target sides and measures mean perplexity over
// the in-domain targets; the minimizer wins, ties to the smaller alpha.
// Candidates that label nothing are skipped and recorded.
inline AlphaCalibration calibrate_alpha(const RankedCorpus& ranks, const ParallelCorpus& corpus,
                                        const std::vector<std::string>& in_domain_targets,
                                        double lower = 0.05, double upper = 0.2, int steps = 8,
                                        int lm_order = 3, double lm_k = 0.1, unsigned threads = 1) {
    if (steps < 2) throw UsageError("calibrate_alpha: steps must be >= 2");
    if (!(lower < upper)) throw UsageError("calibrate_alpha: lower bound must be < upper bound");
    if (in_domain_targets.empty()) throw UsageError("calibrate_alpha: no in-domain targets");
    const double c = static_cast<double>(ranks.size());
    std::vector<int64_t> candidates;
    for (int j = 0; j < steps; ++j) {
        double frac = lower + (upper - lower) * static_cast<double>(j) / static_cast<double>(steps - 1);
        int64_t a = fraction_to_rank(frac, ranks.size());
        if (a < 0) a = 0;
        candidates.push_back(a);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    AlphaCalibration result;
    result.report.mode = "full";
    result.report.corpus_size = ranks.size();
    double best_objective = std::numeric_limits<double>::infinity();
    int64_t best_alpha = -1;
    for (int64_t a : candidates) {
        std::vector<Formality> labels = label_full(ranks, a);
        CalibrationPoint p;
        p.candidate = a;
        std::vector<std::string> selected;
        for (size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == Formality::Formal) {
                ++p.formal_count;
                selected.push_back(corpus.pairs[i].target);
            } else if (labels[i] == Formality::Informal) {
                ++p.informal_count;
                selected.push_back(corpus.pairs[i].target);
            }
        }
        if (selected.empty()) {
            p.skipped = true;
            result.report.trace.push_back(p);
            continue;
        }
        Vocabulary vocab = extract_vocabulary(selected);
        NGramModel lm = train_lm(selected, std::move(vocab), lm_order, lm_k);
        p.objective = mean_perplexity(lm, in_domain_targets, threads);
        result.report.trace.push_back(p);
        if (p.objective < best_objective) {
            best_objective = p.objective;
            best_alpha = a;
        }
    }
    if (best_alpha < 0)
        throw DataError("calibrate_alpha: every candidate alpha yielded an empty labeled corpus");
    result.alpha = best_alpha;
    result.report.threshold = best_alpha;
    result.report.threshold_fraction = c > 0 ? static_cast<double>(best_alpha) / c : 0.0;
    return result;
}

struct AlphaForQuantity {
    int64_t alpha = 0;
    bool reached = true;  // false when no alpha yields target_count pairs
};

// Labeled count under the relative-difference rule is monotone
// non-increasing in alpha, so the largest alpha still reaching the target
// is found by binary search over [0, corpus size].
inline AlphaForQuantity alpha_for_quantity(const RankedCorpus& ranks, int64_t target_count) {
    if (target_count < 0) throw UsageError("alpha_for_quantity: target_count must be >= 0");
    auto count_at = [&](int64_t alpha) { return labeled_count(label_full(ranks, alpha)); };
    if (target_count == 0) return {ranks.size(), true};
    if (count_at(0) < target_count) return {0, false};
    int64_t lo = 0, hi = ranks.size();  // count(lo) >= target, count(hi) == 0 < target
    while (lo + 1 < hi) {
        int64_t mid = lo + (hi - lo) / 2;
        if (count_at(mid) >= target_count) lo = mid;
        else hi = mid;
    }
    return {lo, true};
}

}  // namespace forma
