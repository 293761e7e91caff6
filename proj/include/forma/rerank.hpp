#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iterator>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "forma/corpus.hpp"
#include "forma/error.hpp"
#include "forma/io.hpp"
#include "forma/parallel.hpp"
#include "forma/scorer.hpp"
#include "forma/text.hpp"

namespace forma {

// Relative-frequency formality lexicon. For each term t with class counts
// f and i over the formal/informal target sides:
//
//   beta(t)  = |f - i| / max_t' |f' - i'|
//   kappa(t) = 0 when |f - i| / (f + i) < threshold, else 1
//   p(F|t)   = f / (f + i) * beta * kappa      (p(I|t) symmetric)
//
// Terms are case-sensitive; capitalization carries register signal.
class FormalityLexicon {
public:
    struct Entry {
        int64_t f_count = 0;
        int64_t i_count = 0;
        double beta = 0;
        bool kappa = false;
        double p_formal = 0;
        double p_informal = 0;

        int64_t count() const { return f_count + i_count; }
    };

    FormalityLexicon() = default;

    FormalityLexicon(std::unordered_map<std::string, Entry> raw_counts, double kappa_threshold)
        : terms_(std::move(raw_counts)), kappa_threshold_(kappa_threshold) {
        // zero-count terms are absent by invariant
        for (auto it = terms_.begin(); it != terms_.end();)
            it = it->second.count() == 0 ? terms_.erase(it) : std::next(it);
        for (const auto& [term, e] : terms_)
            max_abs_diff_ = std::max(max_abs_diff_, abs_diff(e));
        for (auto& [term, e] : terms_) derive(e);
    }

    double kappa_threshold() const { return kappa_threshold_; }
    int64_t max_abs_diff() const { return max_abs_diff_; }
    size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }

    const Entry* find(const std::string& term) const {
        auto it = terms_.find(term);
        return it == terms_.end() ? nullptr : &it->second;
    }

    // p(context | term); unknown terms contribute zero.
    double term_probability(const std::string& term, Formality context) const {
        const Entry* e = find(term);
        if (!e) return 0.0;
        return context == Formality::Formal ? e->p_formal : e->p_informal;
    }

    // Terms sorted bytewise, for deterministic serialization and reports.
    std::vector<std::pair<std::string, Entry>> sorted_entries() const {
        std::vector<std::pair<std::string, Entry>> out(terms_.begin(), terms_.end());
        std::sort(out.begin(), out.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        return out;
    }

private:
    static int64_t abs_diff(const Entry& e) {
        int64_t d = e.f_count - e.i_count;
        return d < 0 ? -d : d;
    }

    void derive(Entry& e) {
        const int64_t diff = abs_diff(e);
        e.beta = max_abs_diff_ > 0 ? static_cast<double>(diff) / static_cast<double>(max_abs_diff_)
                                   : 0.0;
        e.kappa = static_cast<double>(diff) / static_cast<double>(e.count()) >= kappa_threshold_;
        const double gate = e.kappa ? e.beta : 0.0;
        e.p_formal = static_cast<double>(e.f_count) / static_cast<double>(e.count()) * gate;
        e.p_informal = static_cast<double>(e.i_count) / static_cast<double>(e.count()) * gate;
    }

    std::unordered_map<std::string, Entry> terms_;
    int64_t max_abs_diff_ = 0;
    double kappa_threshold_ = 0.33;
};

inline FormalityLexicon build_lexicon(const std::vector<std::string>& formal_targets,
                                      const std::vector<std::string>& informal_targets,
                                      double kappa_threshold = 0.33) {
    std::unordered_map<std::string, FormalityLexicon::Entry> counts;
    for (const auto& s : formal_targets)
        for (auto& tok : tokenize(s)) ++counts[std::move(tok)].f_count;
    for (const auto& s : informal_targets)
        for (auto& tok : tokenize(s)) ++counts[std::move(tok)].i_count;
    if (counts.empty())
        throw DataError("build_lexicon: no tokens on either side");
    return FormalityLexicon(std::move(counts), kappa_threshold);
}

inline double term_probability(const FormalityLexicon& lex, const std::string& term,
                               Formality context) {
    return lex.term_probability(term, context);
}

// p(c|Y): sum of per-token class probabilities over the hypothesis.
inline double hypothesis_formality_score(const FormalityLexicon& lex, std::string_view hyp_text,
                                         Formality context) {
    double sum = 0.0;
    for (const auto& tok : tokenize(hyp_text)) sum += lex.term_probability(tok, context);
    return sum;
}

struct Hypothesis {
    std::string text;
    double base_score = 0;  // beam log-probability p(Y|X), consumed as-is
    int rank = 0;           // original beam position
    std::optional<double> quality;   // external quality score, carried through
    std::optional<double> combined;  // set by reranking
};

struct NBestList {
    std::string sample_id;
    std::vector<Hypothesis> hyps;
};

inline double hypothesis_formality_score(const FormalityLexicon& lex, const Hypothesis& hyp,
                                         Formality context) {
    return hypothesis_formality_score(lex, hyp.text, context);
}

// Re-scores with p(Y|X) + lambda (p(c|Y) - p(c_hat|Y)) and sorts descending;
// ties keep the original beam order. lambda = 1 is the plain objective.
inline NBestList rerank_nbest(const FormalityLexicon& lex, const NBestList& list, Formality context,
                              double lambda = 1.0) {
    if (list.hyps.empty()) throw UsageError("rerank_nbest: empty n-best list");
    const Formality other = opposite(context);
    NBestList out;
    out.sample_id = list.sample_id;
    out.hyps = list.hyps;
    for (auto& h : out.hyps) {
        double desired = hypothesis_formality_score(lex, h.text, context);
        double opposed = hypothesis_formality_score(lex, h.text, other);
        h.combined = h.base_score + lambda * (desired - opposed);
    }
    std::stable_sort(out.hyps.begin(), out.hyps.end(), [](const Hypothesis& a, const Hypothesis& b) {
        return *a.combined > *b.combined;
    });
    return out;
}

// N-best file: `sample_id ||| rank ||| base_score ||| text [||| quality]`.
// Hypotheses of one sample must appear together with consecutive ranks from
// 0 and non-increasing base scores.
inline std::vector<NBestList> parse_nbest_file(const std::string& path) {
    std::vector<std::string> lines = read_lines(path);
    std::vector<NBestList> lists;
    std::unordered_map<std::string, size_t> by_id;
    for (size_t ln = 0; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        std::vector<std::string> fields;
        size_t start = 0;
        const std::string& line = lines[ln];
        while (true) {
            size_t sep = line.find("|||", start);
            if (sep == std::string::npos) {
                fields.push_back(trim(std::string_view(line).substr(start)));
                break;
            }
            fields.push_back(trim(std::string_view(line).substr(start, sep - start)));
            start = sep + 3;
        }
        auto fail = [&](const std::string& msg) {
            throw DataError(path + ":" + std::to_string(ln + 1) + ": " + msg);
        };
        if (fields.size() != 4 && fields.size() != 5)
            fail("expected 4 or 5 |||-separated fields, got " + std::to_string(fields.size()));
        Hypothesis h;
        h.rank = static_cast<int>(parse_int(fields[1], "rank"));
        h.base_score = parse_real(fields[2], "base_score");
        h.text = escape_reserved(fields[3]);
        if (fields.size() == 5) h.quality = parse_real(fields[4], "quality");
        const std::string& id = fields[0];
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            if (h.rank != 0) fail("sample " + id + " does not start at rank 0");
            by_id.emplace(id, lists.size());
            lists.push_back({id, {std::move(h)}});
        } else {
            NBestList& list = lists[it->second];
            if (it->second != lists.size() - 1)
                fail("sample " + id + " is not contiguous");
            if (h.rank != static_cast<int>(list.hyps.size()))
                fail("sample " + id + " rank " + std::to_string(h.rank) + " out of order");
            if (h.base_score > list.hyps.back().base_score)
                fail("sample " + id + " base scores increase at rank " + std::to_string(h.rank));
            list.hyps.push_back(std::move(h));
        }
    }
    return lists;
}

inline void write_nbest_file(const std::vector<NBestList>& lists, const std::string& path,
                             bool with_combined = false) {
    std::vector<std::string> lines;
    for (const auto& list : lists) {
        for (size_t r = 0; r < list.hyps.size(); ++r) {
            const Hypothesis& h = list.hyps[r];
            std::string line = list.sample_id;
            line += " ||| ";
            line += std::to_string(r);
            line += " ||| ";
            line += fmt_real(with_combined && h.combined ? *h.combined : h.base_score);
            line += " ||| ";
            line += h.text;
            if (h.quality) {
                line += " ||| ";
                line += fmt_real(*h.quality);
            }
            lines.push_back(std::move(line));
        }
    }
    write_lines(path, lines);
}

struct OracleRow {
    int k = 0;
    std::optional<double> model_accuracy;
    std::optional<double> oracle_accuracy;
    std::optional<double> rerank_accuracy;  // present when a lexicon was given
    double delta_to_best = 0;  // mean rank of the first correct hypothesis,
                               // over samples whose top hypothesis is wrong
    int64_t n_cases = 0;       // number of such samples
    std::optional<double> model_quality;
    std::optional<double> oracle_quality;
    std::optional<double> rerank_quality;
};

struct OracleReport {
    std::vector<OracleRow> rows;
    bool truncated = false;  // some list was shorter than the largest k
};

// Oracle-at-k: for each k, pick the first hypothesis in the top k that the
// scorer judges correct (top hypothesis when none is), against the model's
// plain top-1 and optionally a reranked top-1.
inline OracleReport oracle_experiment(const std::vector<NBestList>& lists,
                                      const std::vector<AnnotatedReference>& formal_refs,
                                      const std::vector<AnnotatedReference>& informal_refs,
                                      const std::vector<Formality>& contexts,
                                      const std::vector<int>& ks,
                                      const FormalityLexicon* lex = nullptr, double lambda = 1.0,
                                      unsigned threads = 1) {
    if (ks.empty()) throw UsageError("oracle_experiment: no k values given");
    for (int k : ks)
        if (k < 1) throw UsageError("oracle_experiment: k values must be >= 1");
    if (lists.size() != contexts.size() || lists.size() != formal_refs.size() ||
        lists.size() != informal_refs.size())
        throw DataError("oracle_experiment: lists, references and contexts differ in length");

    OracleReport report;
    const int max_k = *std::max_element(ks.begin(), ks.end());
    for (const auto& list : lists)
        if (static_cast<int>(list.hyps.size()) < max_k) report.truncated = true;

    // Judge every hypothesis once; everything else is table lookups.
    std::vector<std::vector<JudgmentKind>> judged(lists.size());
    parallel_for(lists.size(), threads, [&](size_t s) {
        const auto& desired = contexts[s] == Formality::Formal ? formal_refs[s] : informal_refs[s];
        const auto& opp = contexts[s] == Formality::Formal ? informal_refs[s] : formal_refs[s];
        judged[s].reserve(lists[s].hyps.size());
        for (const auto& h : lists[s].hyps)
            judged[s].push_back(judge_hypothesis(h.text, desired, opp).kind);
    });

    for (int k : ks) {
        OracleRow row;
        row.k = k;
        std::vector<std::string> model_pick(lists.size()), oracle_pick(lists.size()),
            rerank_pick(lists.size());
        std::vector<std::optional<double>> model_q(lists.size()), oracle_q(lists.size()),
            rerank_q(lists.size());
        double delta_sum = 0;
        for (size_t s = 0; s < lists.size(); ++s) {
            const auto& hyps = lists[s].hyps;
            const int depth = std::min<int>(k, static_cast<int>(hyps.size()));
            int first_correct = -1;
            for (int r = 0; r < depth; ++r) {
                if (judged[s][static_cast<size_t>(r)] == JudgmentKind::Correct) {
                    first_correct = r;
                    break;
                }
            }
            const int oracle_rank = first_correct >= 0 ? first_correct : 0;
            model_pick[s] = hyps[0].text;
            model_q[s] = hyps[0].quality;
            oracle_pick[s] = hyps[static_cast<size_t>(oracle_rank)].text;
            oracle_q[s] = hyps[static_cast<size_t>(oracle_rank)].quality;
            if (judged[s][0] == JudgmentKind::Incorrect && first_correct > 0) {
                ++row.n_cases;
                delta_sum += static_cast<double>(first_correct);
            }
            if (lex) {
                NBestList top_k{lists[s].sample_id,
                                std::vector<Hypothesis>(hyps.begin(), hyps.begin() + depth)};
                NBestList reranked = rerank_nbest(*lex, top_k, contexts[s], lambda);
                rerank_pick[s] = reranked.hyps[0].text;
                rerank_q[s] = reranked.hyps[0].quality;
            }
        }
        row.delta_to_best = row.n_cases > 0 ? delta_sum / static_cast<double>(row.n_cases) : 0.0;
        row.model_accuracy =
            corpus_accuracy(model_pick, formal_refs, informal_refs, contexts, threads).accuracy;
        row.oracle_accuracy =
            corpus_accuracy(oracle_pick, formal_refs, informal_refs, contexts, threads).accuracy;
        if (lex)
            row.rerank_accuracy =
                corpus_accuracy(rerank_pick, formal_refs, informal_refs, contexts, threads).accuracy;
        auto mean_quality = [](const std::vector<std::optional<double>>& qs) -> std::optional<double> {
            double sum = 0;
            int64_t n = 0;
            for (const auto& q : qs) {
                if (!q) return std::nullopt;  // only report when every sample carries a score
                sum += *q;
                ++n;
            }
            if (n == 0) return std::nullopt;
            return sum / static_cast<double>(n);
        };
        row.model_quality = mean_quality(model_q);
        row.oracle_quality = mean_quality(oracle_q);
        if (lex) row.rerank_quality = mean_quality(rerank_q);
        report.rows.push_back(std::move(row));
    }
    return report;
}

// Report TSV, one row per k. Undefined cells render as "-".
inline std::vector<std::string> oracle_report_tsv(const OracleReport& report) {
    std::vector<std::string> lines;
    const bool has_rerank = !report.rows.empty() && report.rows.front().rerank_accuracy.has_value();
    const bool has_quality = !report.rows.empty() && report.rows.front().model_quality.has_value();
    std::string header = "k\tmodel_acc\toracle_acc";
    if (has_rerank) header += "\trerank_acc";
    header += "\tdelta_to_best\tn_cases";
    if (has_quality) {
        header += "\tmodel_quality\toracle_quality";
        if (has_rerank) header += "\trerank_quality";
    }
    lines.push_back(header);
    auto cell = [](const std::optional<double>& v) {
        return v ? fmt_fixed(*v, 4) : std::string("-");
    };
    for (const auto& r : report.rows) {
        std::string line = std::to_string(r.k);
        line += '\t';
        line += cell(r.model_accuracy);
        line += '\t';
        line += cell(r.oracle_accuracy);
        if (has_rerank) {
            line += '\t';
            line += cell(r.rerank_accuracy);
        }
        line += '\t';
        line += fmt_fixed(r.delta_to_best, 2);
        line += '\t';
        line += std::to_string(r.n_cases);
        if (has_quality) {
            line += '\t';
            line += cell(r.model_quality);
            line += '\t';
            line += cell(r.oracle_quality);
            if (has_rerank) {
                line += '\t';
                line += cell(r.rerank_quality);
            }
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

// Lexicon TSV: term, f_count, i_count, beta, kappa, p_formal, p_informal;
// sorted by term. The first line is a header carrying the threshold.
inline void write_lexicon_tsv(const FormalityLexicon& lex, const std::string& path) {
    std::vector<std::string> lines;
    lines.push_back("#forma-lexicon 1\tkappa_threshold=" + fmt_real(lex.kappa_threshold()));
    for (const auto& [term, e] : lex.sorted_entries()) {
        std::string line = term;
        line += '\t';
        line += std::to_string(e.f_count);
        line += '\t';
        line += std::to_string(e.i_count);
        line += '\t';
        line += fmt_real(e.beta);
        line += '\t';
        line += e.kappa ? '1' : '0';
        line += '\t';
        line += fmt_real(e.p_formal);
        line += '\t';
        line += fmt_real(e.p_informal);
        lines.push_back(std::move(line));
    }
    write_lines(path, lines);
}

inline FormalityLexicon read_lexicon_tsv(const std::string& path) {
    std::vector<std::string> lines = read_lines(path);
    if (lines.empty() || lines[0].rfind("#forma-lexicon 1\t", 0) != 0)
        throw DataError(path + ": not a forma-lexicon v1 file");
    std::string header = lines[0];
    size_t eq = header.find("kappa_threshold=");
    if (eq == std::string::npos) throw DataError(path + ": missing kappa_threshold");
    double threshold = parse_real(header.substr(eq + 16), "kappa_threshold");
    std::unordered_map<std::string, FormalityLexicon::Entry> counts;
    for (size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::vector<std::string> f = split_tsv(lines[i]);
        if (f.size() != 7)
            throw DataError(path + ":" + std::to_string(i + 1) + ": expected 7 columns");
        FormalityLexicon::Entry e;
        e.f_count = parse_int(f[1], "f_count");
        e.i_count = parse_int(f[2], "i_count");
        counts.emplace(f[0], e);
    }
    // derived columns are recomputed from the counts
    return FormalityLexicon(std::move(counts), threshold);
}

}  // namespace forma
