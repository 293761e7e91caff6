#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "forma/config.hpp"
#include "forma/corpus.hpp"
#include "forma/error.hpp"
#include "forma/io.hpp"
#include "forma/lm.hpp"
#include "forma/pivot.hpp"
#include "forma/prep.hpp"
#include "forma/rerank.hpp"
#include "forma/scorer.hpp"
#include "forma/select.hpp"
#include "forma/version.hpp"

namespace forma {

struct ScorePoint {
    std::string checkpoint_id;
    double accuracy = 0;
};

struct ScoreSeries {
    std::vector<ScorePoint> points;
};

// Score series TSV: checkpoint_id, accuracy. Ids must be unique.
inline ScoreSeries read_score_series(const std::string& path) {
    ScoreSeries series;
    std::vector<std::string> lines = read_lines(path);
    std::unordered_set<std::string> ids;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::vector<std::string> f = split_tsv(lines[i]);
        if (f.size() != 2)
            throw DataError(path + ":" + std::to_string(i + 1) + ": expected 2 columns");
        if (!ids.insert(f[0]).second)
            throw DataError(path + ":" + std::to_string(i + 1) + ": duplicate checkpoint id " + f[0]);
        series.points.push_back({f[0], parse_real(f[1], "accuracy")});
    }
    if (series.points.empty()) throw DataError(path + ": empty score series");
    return series;
}

struct WindowResult {
    size_t start = 0;
    double mean = 0;
};

// Contiguous window of the given width with the highest mean accuracy;
// ties go to the earliest start. Window sums are computed independently
// per window so results match exhaustive enumeration bit for bit.
inline WindowResult best_window(const ScoreSeries& series, int window = 10) {
    const size_t n = series.points.size();
    if (window < 1 || static_cast<size_t>(window) > n)
        throw UsageError("best_window: window must be in [1, series length " + std::to_string(n) +
                         "]");
    const size_t w = static_cast<size_t>(window);
    size_t best_start = 0;
    double best_sum = -1;
    bool first = true;
    for (size_t start = 0; start + w <= n; ++start) {
        double sum = 0;
        for (size_t j = 0; j < w; ++j) sum += series.points[start + j].accuracy;
        if (first || sum > best_sum) {
            best_sum = sum;
            best_start = start;
            first = false;
        }
    }
    return {best_start, best_sum / static_cast<double>(w)};
}

// Contexts argument: a single letter applying everywhere, or a file with
// one F/I line per sample.
inline std::vector<Formality> load_contexts(const std::string& arg, size_t n) {
    if (arg == "F" || arg == "I") {
        return std::vector<Formality>(n, arg == "F" ? Formality::Formal : Formality::Informal);
    }
    std::vector<std::string> lines = read_lines(arg);
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.size() != n)
        throw DataError("context file " + arg + " has " + std::to_string(lines.size()) +
                        " entries, expected " + std::to_string(n));
    std::vector<Formality> out;
    out.reserve(n);
    for (size_t i = 0; i < lines.size(); ++i) {
        std::string v = trim(lines[i]);
        if (v != "F" && v != "I")
            throw DataError("context file " + arg + ":" + std::to_string(i + 1) +
                            ": expected F or I, got '" + v + "'");
        out.push_back(v == "F" ? Formality::Formal : Formality::Informal);
    }
    return out;
}

struct PipelineConfig {
    Config raw;
    std::string mode;  // "supervised" or "zero-shot"
    std::string out_dir;
    uint64_t seed = 13;
    unsigned threads = 1;

    // mining
    int lm_order = 3;
    double lm_k = 0.1;
    int64_t lm_sample = 10000;
    std::string alpha_mode;  // "auto" or an integer
    double select_lower = 0.05;
    double select_upper = 0.2;
    int select_steps = 8;

    // prep
    bool prep_enabled = false;
    std::string pool_scores;  // optional confidence sidecar

    // lexicon / rerank / score
    double kappa_threshold = 0.33;
    std::string lexicon_source;  // "seeds" or "mined"
    double rerank_lambda = 1.0;
    int64_t rerank_k = 0;  // 0 = whole list

    // supervised inputs
    std::string pool_src, pool_tgt;
    std::string seed_formal, seed_informal;

    // zero-shot inputs
    std::string labeled_a, labeled_b;
    std::string zs_target_count;  // "auto" or an integer

    // optional scoring inputs
    std::string nbest, refs_formal, refs_informal, contexts;

    static PipelineConfig from_config(const Config& cfg) {
        PipelineConfig pc;
        pc.raw = cfg;
        pc.mode = cfg.get_or("mode", "supervised");
        pc.out_dir = cfg.get("out");
        pc.seed = static_cast<uint64_t>(cfg.get_int_or("seed", 13));
        pc.threads = static_cast<unsigned>(cfg.get_int_or("threads", 1));
        pc.lm_order = static_cast<int>(cfg.get_int_or("lm.order", 3));
        pc.lm_k = cfg.get_real_or("lm.k", 0.1);
        pc.lm_sample = cfg.get_int_or("lm.sample", 10000);
        pc.alpha_mode = cfg.get_or("select.alpha", "auto");
        pc.select_lower = cfg.get_real_or("select.lower", 0.05);
        pc.select_upper = cfg.get_real_or("select.upper", 0.2);
        pc.select_steps = static_cast<int>(cfg.get_int_or("select.steps", 8));
        pc.prep_enabled = cfg.get_bool_or("prep.enabled", false);
        pc.pool_scores = cfg.get_or("pool.scores", "");
        pc.kappa_threshold = cfg.get_real_or("lexicon.kappa", 0.33);
        pc.lexicon_source =
            cfg.get_or("lexicon.source", pc.mode == "zero-shot" ? "mined" : "seeds");
        pc.rerank_lambda = cfg.get_real_or("rerank.lambda", 1.0);
        pc.rerank_k = cfg.get_int_or("rerank.k", 0);
        pc.pool_src = cfg.get_or("pool.src", "");
        pc.pool_tgt = cfg.get_or("pool.tgt", "");
        pc.seed_formal = cfg.get_or("seed.formal", "");
        pc.seed_informal = cfg.get_or("seed.informal", "");
        pc.labeled_a = cfg.get_or("labeled.a", "");
        pc.labeled_b = cfg.get_or("labeled.b", "");
        pc.zs_target_count = cfg.get_or("zs.target_count", "auto");
        pc.nbest = cfg.get_or("nbest", "");
        pc.refs_formal = cfg.get_or("refs.formal", "");
        pc.refs_informal = cfg.get_or("refs.informal", "");
        pc.contexts = cfg.get_or("contexts", "");
        return pc;
    }

    // Checks structure and that every referenced input exists, before any
    // stage runs.
    void validate() const {
        if (mode != "supervised" && mode != "zero-shot")
            throw UsageError("pipeline: mode must be 'supervised' or 'zero-shot'");
        if (out_dir.empty()) throw UsageError("pipeline: 'out' directory is required");
        if (lm_order < 1) throw UsageError("pipeline: lm.order must be >= 1");
        if (!(lm_k > 0)) throw UsageError("pipeline: lm.k must be > 0");
        if (lexicon_source != "seeds" && lexicon_source != "mined")
            throw UsageError("pipeline: lexicon.source must be 'seeds' or 'mined'");
        std::vector<std::pair<std::string, std::string>> required;
        required.emplace_back("pool.src", pool_src);
        required.emplace_back("pool.tgt", pool_tgt);
        if (mode == "supervised") {
            required.emplace_back("seed.formal", seed_formal);
            required.emplace_back("seed.informal", seed_informal);
        } else {
            required.emplace_back("labeled.a", labeled_a);
            required.emplace_back("labeled.b", labeled_b);
        }
        for (const auto& [key, path] : required) {
            if (path.empty()) throw UsageError("pipeline: missing required config key " + key);
            if (!std::filesystem::exists(path))
                throw DataError("pipeline: " + key + " references missing file " + path);
        }
        std::vector<std::pair<std::string, std::string>> optional = {
            {"pool.scores", pool_scores},
            {"nbest", nbest},
            {"refs.formal", refs_formal},
            {"refs.informal", refs_informal},
        };
        if (contexts != "F" && contexts != "I") optional.emplace_back("contexts", contexts);
        for (const auto& [key, path] : optional) {
            if (!path.empty() && !std::filesystem::exists(path))
                throw DataError("pipeline: " + key + " references missing file " + path);
        }
        if (!nbest.empty() && contexts.empty())
            throw UsageError("pipeline: nbest scoring requires 'contexts'");
        if (alpha_mode != "auto") parse_int(alpha_mode, "select.alpha");
        if (zs_target_count != "auto") parse_int(zs_target_count, "zs.target_count");
    }

    uint64_t config_hash() const {
        // thread count cannot affect results and is excluded from the
        // fingerprint
        return fnv1a64(raw.canonical({"threads"}));
    }
};

namespace detail {

template <class Fn>
auto run_stage(const std::string& name, Fn&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name + ": " + e.what());
    }
}

inline std::string artifact(const PipelineConfig& pc, const std::string& name) {
    return (std::filesystem::path(pc.out_dir) / name).string();
}

struct RankOutcome {
    std::vector<PerplexityScore> formal;
    std::vector<PerplexityScore> informal;
};

// Builds both register rankings of `texts` against the seed sentence sets.
// vocabulary and in-domain model come from the seed side; the general model
// is trained on a seeded sample of the pool with the same vocabulary.
inline RankOutcome rank_against_seeds(const PipelineConfig& pc,
                                      const std::vector<std::string>& texts,
                                      const std::vector<std::string>& formal_seed,
                                      const std::vector<std::string>& informal_seed,
                                      const std::string& model_prefix) {
    RankOutcome out;
    auto one_side = [&](const std::vector<std::string>& seed_sents, const std::string& side) {
        if (seed_sents.empty()) throw DataError("no " + side + " seed sentences");
        Vocabulary vocab = extract_vocabulary(seed_sents);
        NGramModel lm_in = train_lm(seed_sents, vocab, pc.lm_order, pc.lm_k, pc.seed);
        NGramModel lm_gen = train_lm_sampled(texts, vocab, pc.lm_order, pc.lm_k,
                                             static_cast<size_t>(pc.lm_sample), pc.seed);
        lm_in.save(artifact(pc, model_prefix + side + ".model"));
        return perplexity_difference_rank(texts, lm_in, lm_gen, pc.threads);
    };
    out.formal = one_side(formal_seed, "formal");
    out.informal = one_side(informal_seed, "informal");
    write_ranking_tsv(out.formal, artifact(pc, "rank_formal.tsv"));
    write_ranking_tsv(out.informal, artifact(pc, "rank_informal.tsv"));
    return out;
}

struct MineOutcome {
    LabeledCorpus labeled;
    SelectionReport report;
};

inline MineOutcome mine_full(const PipelineConfig& pc, const RankedCorpus& ranks,
                             const ParallelCorpus& corpus,
                             const std::vector<std::string>& in_domain_targets,
                             std::optional<int64_t> forced_alpha) {
    MineOutcome out;
    int64_t alpha = 0;
    if (forced_alpha) {
        alpha = *forced_alpha;
        out.report.mode = "full";
        out.report.corpus_size = ranks.size();
        out.report.threshold = alpha;
        out.report.threshold_fraction =
            ranks.size() > 0 ? static_cast<double>(alpha) / static_cast<double>(ranks.size()) : 0;
    } else {
        AlphaCalibration cal =
            calibrate_alpha(ranks, corpus, in_domain_targets, pc.select_lower, pc.select_upper,
                            pc.select_steps, pc.lm_order, pc.lm_k, pc.threads);
        alpha = cal.alpha;
        out.report = std::move(cal.report);
    }
    out.labeled = assign_full(ranks, corpus, alpha);
    out.report.formal_count = out.labeled.count(Formality::Formal);
    out.report.informal_count = out.labeled.count(Formality::Informal);
    out.report.none_count = out.labeled.count(Formality::None);
    return out;
}

inline void score_stage(const PipelineConfig& pc, const std::vector<NBestList>& lists,
                        const std::vector<NBestList>& reranked) {
    if (pc.refs_formal.empty() || pc.refs_informal.empty()) return;
    auto formal_refs = load_annotated_file(pc.refs_formal, Formality::Formal);
    auto informal_refs = load_annotated_file(pc.refs_informal, Formality::Informal);
    std::vector<Formality> ctx = load_contexts(pc.contexts, lists.size());
    if (formal_refs.size() != lists.size() || informal_refs.size() != lists.size())
        throw DataError("reference count does not match n-best sample count");
    auto top1 = [](const std::vector<NBestList>& ls) {
        std::vector<std::string> out;
        out.reserve(ls.size());
        for (const auto& l : ls) out.push_back(l.hyps.front().text);
        return out;
    };
    ScoreReport model = corpus_accuracy(top1(lists), formal_refs, informal_refs, ctx, pc.threads);
    write_lines(artifact(pc, "score_model.txt"), model.render());
    ScoreReport rr = corpus_accuracy(top1(reranked), formal_refs, informal_refs, ctx, pc.threads);
    write_lines(artifact(pc, "score_reranked.txt"), rr.render());
    write_lines(artifact(pc, "judgments_reranked.tsv"), judgments_tsv(rr));
}

inline void rerank_and_score(const PipelineConfig& pc, const FormalityLexicon& lex) {
    if (pc.nbest.empty()) return;
    std::vector<NBestList> lists = parse_nbest_file(pc.nbest);
    if (lists.empty()) throw DataError("n-best file " + pc.nbest + " is empty");
    std::vector<Formality> ctx = load_contexts(pc.contexts, lists.size());
    std::vector<NBestList> reranked(lists.size());
    parallel_for(lists.size(), pc.threads, [&](size_t i) {
        NBestList list = lists[i];
        if (pc.rerank_k > 0 && static_cast<int64_t>(list.hyps.size()) > pc.rerank_k)
            list.hyps.resize(static_cast<size_t>(pc.rerank_k));
        reranked[i] = rerank_nbest(lex, list, ctx[i], pc.rerank_lambda);
    });
    write_nbest_file(reranked, artifact(pc, "nbest.reranked.txt"), true);
    score_stage(pc, lists, reranked);
}

}  // namespace detail

// Supervised flow: prep -> vocab/LM -> rank -> mine -> lexicon -> rerank ->
// score. Zero-shot flow replaces the seed inputs with pivot stages over two
// labeled corpora and ranks the pool by its source side. All artifacts land
// in out_dir; reruns with the same config are byte-identical for any thread
// count.
inline void run_pipeline(const PipelineConfig& pc) {
    pc.validate();
    std::filesystem::create_directories(pc.out_dir);

    // Run metadata: everything needed to reproduce, nothing that varies
    // between identical runs.
    std::vector<std::string> meta;
    meta.push_back("forma_version=" + std::string(kVersion));
    meta.push_back("config_hash=" + to_hex(pc.config_hash()));
    meta.push_back("seed=" + std::to_string(pc.seed));
    for (const auto& [k, v] : pc.raw.values())
        if (k != "threads") meta.push_back("config." + k + "=" + v);

    ParallelCorpus pool = detail::run_stage("load", [&] {
        ParallelCorpus c = load_parallel(pc.pool_src, pc.pool_tgt);
        if (!pc.pool_scores.empty()) load_aux_scores(c, pc.pool_scores);
        return c;
    });

    if (pc.prep_enabled) {
        detail::run_stage("prep", [&] {
            FilterStats stats;
            FilterConfig fc;
            fc.confidence_threshold = pc.raw.get_real_or("prep.confidence", 0.7);
            pool = prep_cascade(pool, fc, !pc.pool_scores.empty(), stats);
            if (!stats.reconciles()) throw DataError("filter stats do not reconcile");
            write_lines(detail::artifact(pc, "prep_stats.txt"), stats.render());
            for (size_t i = 0; i < pool.pairs.size(); ++i)
                pool.pairs[i].index = static_cast<int64_t>(i);
            save_parallel(pool, detail::artifact(pc, "pool.clean.src"),
                          detail::artifact(pc, "pool.clean.tgt"));
            return 0;
        });
    }
    if (pool.pairs.empty())
        throw StageError(pc.prep_enabled ? "prep: no pairs survive preprocessing"
                                         : "load: pool corpus is empty");

    std::vector<std::string> formal_seed, informal_seed;
    std::vector<std::string> rank_texts;  // what gets ranked: targets or sources
    std::optional<int64_t> forced_alpha;
    int64_t zs_target = 0;

    if (pc.mode == "supervised") {
        detail::run_stage("seeds", [&] {
            formal_seed = read_corpus_lines(pc.seed_formal);
            informal_seed = read_corpus_lines(pc.seed_informal);
            return 0;
        });
        rank_texts = pool.target_sentences();
        if (pc.alpha_mode != "auto") forced_alpha = parse_int(pc.alpha_mode, "select.alpha");
    } else {
        detail::run_stage("pivot", [&] {
            LabeledCorpus a = read_labeled_tsv(pc.labeled_a);
            LabeledCorpus b = read_labeled_tsv(pc.labeled_b);
            TripletCorpus triplets = intersect_on_source(a, b);
            write_triplets_tsv(triplets, detail::artifact(pc, "triplets.tsv"));
            CombinationStats stats = combination_stats(triplets);
            write_lines(detail::artifact(pc, "pivot_stats.txt"), render_combination_table(stats));
            write_lines(detail::artifact(pc, "pivot_stats.tsv"), combination_stats_tsv(stats));
            meta.push_back("pivot.coverage_a=" + fmt_real(triplets.coverage_a));
            meta.push_back("pivot.coverage_b=" + fmt_real(triplets.coverage_b));
            PivotSeeds seeds = pivot_in_domain_sets(triplets);
            if (seeds.formal_sources.empty() || seeds.informal_sources.empty())
                throw DataError(
                    "no pivot seed sources with matching labels (formal=" +
                    std::to_string(seeds.formal_sources.size()) + ", informal=" +
                    std::to_string(seeds.informal_sources.size()) +
                    "); zero-shot mining cannot proceed");
            write_lines(detail::artifact(pc, "seeds_formal.txt"), seeds.formal_sources);
            write_lines(detail::artifact(pc, "seeds_informal.txt"), seeds.informal_sources);
            formal_seed = std::move(seeds.formal_sources);
            informal_seed = std::move(seeds.informal_sources);
            if (pc.zs_target_count == "auto") {
                int64_t ca = a.count(Formality::Formal) + a.count(Formality::Informal);
                int64_t cb = b.count(Formality::Formal) + b.count(Formality::Informal);
                zs_target = (ca + cb + 1) / 2;  // mean of the two, rounded half-up
            } else {
                zs_target = parse_int(pc.zs_target_count, "zs.target_count");
            }
            meta.push_back("zs.target_count=" + std::to_string(zs_target));
            return 0;
        });
        rank_texts = pool.source_sentences();
    }

    detail::RankOutcome rankings = detail::run_stage("rank", [&] {
        return detail::rank_against_seeds(pc, rank_texts, formal_seed, informal_seed, "lm_");
    });

    detail::MineOutcome mined = detail::run_stage("mine", [&] {
        RankedCorpus ranks = ranked_corpus_from_scores(rankings.formal, rankings.informal);
        if (pc.mode == "zero-shot") {
            AlphaForQuantity afq = alpha_for_quantity(ranks, zs_target);
            if (!afq.reached)
                meta.push_back("zs.alpha_warning=target count unreachable, using alpha 0");
            forced_alpha = afq.alpha;
        }
        std::vector<std::string> in_domain;
        in_domain.reserve(formal_seed.size() + informal_seed.size());
        in_domain.insert(in_domain.end(), formal_seed.begin(), formal_seed.end());
        in_domain.insert(in_domain.end(), informal_seed.begin(), informal_seed.end());
        detail::MineOutcome m = detail::mine_full(pc, ranks, pool, in_domain, forced_alpha);
        if (m.report.formal_count + m.report.informal_count == 0)
            throw DataError("mining selected no pairs");
        write_labeled_tsv(m.labeled, detail::artifact(pc, "labeled.tsv"), false);
        write_labeled_tsv(m.labeled, detail::artifact(pc, "labeled_all.tsv"), true);
        write_lines(detail::artifact(pc, "selection_report.txt"), m.report.render());
        return m;
    });

    FormalityLexicon lexicon = detail::run_stage("lexicon", [&] {
        std::vector<std::string> f_side, i_side;
        if (pc.lexicon_source == "seeds" && pc.mode == "supervised") {
            f_side = formal_seed;
            i_side = informal_seed;
        } else {
            f_side = mined.labeled.targets_with_label(Formality::Formal);
            i_side = mined.labeled.targets_with_label(Formality::Informal);
        }
        FormalityLexicon lex = build_lexicon(f_side, i_side, pc.kappa_threshold);
        write_lexicon_tsv(lex, detail::artifact(pc, "lexicon.tsv"));
        return lex;
    });

    detail::run_stage("rerank", [&] {
        detail::rerank_and_score(pc, lexicon);
        return 0;
    });

    write_lines(detail::artifact(pc, "meta.txt"), meta);
}

}  // namespace forma
