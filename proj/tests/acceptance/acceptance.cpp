// Release gate. One [PASS]/[FAIL] line per shipped guarantee; every check
// runs against frozen seeds and hand-derived oracles, and any failure flips
// the exit status. Indented lines record the numbers a reviewer would ask
// for (both learning-rate configurations, worst errors, retained sets).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "micns/alignment.hpp"
#include "micns/dataset.hpp"
#include "micns/fuzzy.hpp"
#include "micns/gradcheck.hpp"
#include "micns/metrics.hpp"
#include "micns/model.hpp"
#include "micns/neural_symbolic.hpp"
#include "micns/rng.hpp"
#include "micns/stability.hpp"
#include "micns/tensor_io.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace micns;

namespace {

std::vector<std::string> g_notes;

void note(std::string s) { g_notes.push_back(std::move(s)); }

// Records the failed expression and keeps going, so a single run still
// reports every criterion.
#define REQUIRE(cond)                                                        \
    do {                                                                     \
        if (!(cond)) {                                                       \
            g_notes.push_back(std::string("requirement failed: ") + #cond +  \
                              " (line " + std::to_string(__LINE__) + ")");   \
            ok = false;                                                      \
        }                                                                    \
    } while (0)

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Min/max reductions are only piecewise smooth, so a finite-difference probe
// straddling a tie measures nothing. True for operating points whose
// rule-layer max arguments and min gaps clear `margin` everywhere; the
// gradient check still has to pass at the accepted point.
bool rule_layer_conditioned(const model::ForwardResult& out, nsym::RuleSemantics s,
                            double margin) {
    const std::size_t batch = out.concept_probs.rows();
    const std::size_t n = out.concept_probs.cols();
    const std::size_t classes = out.neural_scores.cols();
    for (std::size_t b = 0; b < batch; ++b) {
        const nsym::IndicatorMatrix& ind = out.indicators[b];
        for (std::size_t j = 0; j < classes; ++j) {
            std::vector<double> vals;
            for (std::size_t i = 0; i < n; ++i) {
                double o = ind.polarity.at(i, j);
                double r = ind.relevance.at(i, j);
                double c = out.concept_probs.at(b, i);
                double lhs = 0.0, rhs = 0.0;
                switch (s) {
                    case nsym::RuleSemantics::literal: lhs = 1.0 - o; rhs = r; break;
                    case nsym::RuleSemantics::filtered: lhs = 1.0 - r; rhs = o; break;
                    case nsym::RuleSemantics::grounded:
                        lhs = 1.0 - r;
                        rhs = o * c + (1.0 - o) * (1.0 - c);
                        break;
                }
                if (std::abs(lhs - rhs) < margin) return false;
                vals.push_back(std::max(lhs, rhs));
            }
            std::sort(vals.begin(), vals.end());
            if (vals.size() > 1 && vals[1] - vals[0] < margin) return false;
        }
    }
    return true;
}

const fs::path& work_dir() {
    static fs::path p = [] {
        fs::path d = fs::temp_directory_path() / "micns_acceptance";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return p;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Byte-compares two directory trees, relative-path by relative-path.
bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
    std::vector<fs::path> rel_a, rel_b;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a));
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b));
    std::sort(rel_a.begin(), rel_a.end());
    std::sort(rel_b.begin(), rel_b.end());
    if (rel_a != rel_b) {
        why = "file lists differ";
        return false;
    }
    for (const auto& r : rel_a)
        if (read_bytes(a / r) != read_bytes(b / r)) {
            why = "bytes differ at " + r.string();
            return false;
        }
    return true;
}

std::string fmt(double v, int digits = 3) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(digits);
    ss << v;
    return ss.str();
}

// ---------------------------------------------------------------------------
// 1. Reverse-mode gradients vs central finite differences: 100 randomized
//    graphs covering every op, then the complete training loss (4-sample
//    batch, 4 concepts, 2 classes) under each rule-layer variant.
//    Tolerance 1e-4 relative at h=1e-5; the whole criterion under a minute.

bool crit_gradients() {
    bool ok = true;
    auto t0 = std::chrono::steady_clock::now();

    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        auto rg = testutil::make_random_graph(4200 + 17 * i);
        auto rep = check_gradients(*rg.graph, rg.root, 1e-5, 1e-4);
        worst = std::max(worst, rep.max_rel_error);
        REQUIRE(rep.pass);
    }
    note("100 random graphs, worst relative error " + fmt(worst, 10));

    model::ModelConfig cfg;
    cfg.n_classes = 2;
    cfg.n_concepts = 4;
    cfg.feature_dim = 6;
    cfg.embed_dim = 4;
    cfg.hidden_dim = 5;

    const std::size_t batch = 4;
    const double margin = 1e-3;
    Tensor feats, cbits;
    std::vector<std::size_t> labels(batch);
    ParamMap params;
    std::size_t attempt = 0;
    bool found = false;
    for (; attempt < 50 && !found; ++attempt) {
        Rng data_rng(71 + attempt);
        feats = testutil::random_tensor(data_rng, {batch, cfg.feature_dim});
        cbits = Tensor({batch, cfg.n_concepts});
        for (auto& v : cbits.data()) v = data_rng.index(2) ? 1.0 : 0.0;
        for (auto& y : labels) y = data_rng.index(cfg.n_classes);

        params.clear();
        Rng init_rng(11 + attempt);
        model::init_model_params(params, cfg, init_rng);

        auto out = model::forward_full(feats, params, cfg);
        found = rule_layer_conditioned(out, nsym::RuleSemantics::literal, margin) &&
                rule_layer_conditioned(out, nsym::RuleSemantics::filtered, margin) &&
                rule_layer_conditioned(out, nsym::RuleSemantics::grounded, margin);
    }
    note("full-loss operating point: attempt " + std::to_string(attempt) +
         ", reduction gaps over " + fmt(margin, 3));
    REQUIRE(found);

    for (auto sem : {nsym::RuleSemantics::literal, nsym::RuleSemantics::filtered,
                     nsym::RuleSemantics::grounded}) {
        cfg.semantics = sem;
        Graph g;
        model::ForwardNodes fwd = model::build_forward(g, batch, params, cfg);
        model::LossNodes loss = model::build_loss(g, fwd, labels, cbits, 0.1, 0.1);
        g.bind("features", feats);
        g.forward(loss.total);

        auto rep = check_gradients(g, loss.total, 1e-5, 1e-4);
        note(std::string("full loss graph (") + nsym::rule_semantics_name(sem) +
             "): max relative error " + fmt(rep.max_rel_error, 10));
        REQUIRE(rep.pass);
    }

    double elapsed = seconds_since(t0);
    note("elapsed " + fmt(elapsed, 1) + "s (budget 60s)");
    REQUIRE(elapsed < 60.0);
    return ok;
}

// ---------------------------------------------------------------------------
// 2. The fuzzy rule aggregation restricted to Boolean indicators equals the
//    classical conjunction AND_i(NOT polarity_i OR relevance_i), checked
//    exhaustively for every assignment up to 4 concepts, in under a second.

bool crit_rule_aggregation() {
    bool ok = true;
    auto t0 = std::chrono::steady_clock::now();

    std::size_t cases = 0;
    for (std::size_t n = 1; n <= 4; ++n) {
        for (std::uint32_t po = 0; po < (1u << n); ++po) {
            for (std::uint32_t re = 0; re < (1u << n); ++re) {
                nsym::IndicatorMatrix ind;
                ind.polarity = Tensor({n, 1});
                ind.relevance = Tensor({n, 1});
                bool classical = true;
                for (std::size_t i = 0; i < n; ++i) {
                    bool o = (po >> i) & 1u, r = (re >> i) & 1u;
                    ind.polarity.at(i, 0) = o ? 1.0 : 0.0;
                    ind.relevance.at(i, 0) = r ? 1.0 : 0.0;
                    classical = classical && (!o || r);
                }
                std::vector<double> agg = nsym::aggregate_eq1(ind);
                REQUIRE(agg.size() == 1);
                REQUIRE(agg[0] == (classical ? 1.0 : 0.0));
                ++cases;
            }
        }
    }
    note(std::to_string(cases) + " Boolean assignments, all exact");

    double elapsed = seconds_since(t0);
    note("elapsed " + fmt(elapsed, 3) + "s (budget 1s)");
    REQUIRE(elapsed < 1.0);
    return ok;
}

// ---------------------------------------------------------------------------
// 3. End-to-end rule recovery on the built-in planted dataset (4 concepts,
//    2 classes, 400 samples, noise 0.05, generator seed 1): defaults
//    lambda1 = lambda2 = 0.1 over 100 epochs with a 30-epoch concept
//    alignment stage and the grounded rule layer. The base learning rate
//    5e-5 is tried first; if it stalls the 10x rate is used, and both
//    configurations are recorded. Passing means fused accuracy >= 0.95,
//    the top rule per class equal to the planted rule, and a Booleanized
//    rule error rate <= 0.05, all inside five minutes.

struct RecoveryRun {
    double fused_acc = 0.0;
    double rule_error = 0.0;
    bool rules_match = false;
    std::string summary;
};

RecoveryRun run_recovery(const data::Dataset& ds,
                         const std::vector<fuzzy::ConjunctiveRule>& planted, double lr) {
    model::ModelConfig cfg;
    cfg.n_classes = 2;
    cfg.n_concepts = 4;
    cfg.feature_dim = ds.features.cols();
    cfg.semantics = nsym::RuleSemantics::grounded;

    model::Hyperparams hp;
    hp.learning_rate = lr;
    hp.epochs = 100;
    hp.concept_epochs = 30;
    hp.seed = 1;

    model::TrainResult tr = model::train(ds, cfg, hp);
    model::Evaluation ev = model::evaluate(ds, tr.params, cfg);

    RecoveryRun r;
    r.fused_acc = ev.fused.accuracy;
    r.rule_error = ev.rules.fidelity.mean;
    r.rules_match = true;
    std::string texts;
    for (const auto& rule : planted) {
        const fuzzy::ConjunctiveRule& top = ev.rules.top_rule(rule.class_index);
        if (!top.same_body(rule)) r.rules_match = false;
        if (!texts.empty()) texts += "; ";
        texts += fuzzy::format_rule(top) + " (support " + std::to_string(top.support) + ")";
    }
    std::ostringstream ss;
    ss << "lr " << lr << ": fused accuracy " << fmt(r.fused_acc) << ", rule error "
       << fmt(r.rule_error) << ", top rules " << texts;
    r.summary = ss.str();
    return r;
}

bool crit_rule_recovery() {
    bool ok = true;
    auto t0 = std::chrono::steady_clock::now();

    data::SyntheticSpec spec;  // defaults: 4 concepts, 2x200 samples, noise 0.05
    auto synth = data::gen_synthetic(spec, work_dir() / "recovery_data");
    std::vector<fuzzy::ConjunctiveRule> planted;
    for (const auto& r : synth.rules) planted.push_back(r.normalized());

    auto passes = [](const RecoveryRun& r) {
        return r.fused_acc >= 0.95 && r.rules_match && r.rule_error <= 0.05;
    };

    RecoveryRun base = run_recovery(synth.dataset, planted, 5e-5);
    RecoveryRun judged = base;
    if (passes(base)) {
        note(base.summary + " [recovered]");
    } else {
        note(base.summary + " [stalled, retrying at 10x]");
        judged = run_recovery(synth.dataset, planted, 5e-4);
        note(judged.summary + (passes(judged) ? " [recovered]" : " [failed]"));
    }

    REQUIRE(judged.fused_acc >= 0.95);
    REQUIRE(judged.rules_match);
    REQUIRE(judged.rule_error <= 0.05);

    double elapsed = seconds_since(t0);
    note("elapsed " + fmt(elapsed, 1) + "s (budget 300s)");
    REQUIRE(elapsed < 300.0);
    return ok;
}

// ---------------------------------------------------------------------------
// 4. Concept labeling against hand arithmetic: the 3-image fixture's
//    heatmap cells, pooled scores and 0.65-threshold labels agree with the
//    written-out cosines to 1e-9, and the projection floor keeps a 0.45
//    maximum while pruning 0.44 (boundary inclusive).

bool crit_labeling() {
    bool ok = true;
    auto fx = testutil::make_label_fixture();
    const double r = 1.0 / std::sqrt(2.0);

    // Map 0 cells are (1,0) (0,1) (1,1) (0,0); against the unit-x embedding
    // the cosines read 1, 0, 1/sqrt(2), 0 (zero vectors scoring 0).
    Tensor h = alignment::compute_heatmap(fx.maps[0], Tensor::vec({1.0, 0.0}));
    const double expect_h[4] = {1.0, 0.0, r, 0.0};
    std::size_t idx = 0;
    double worst = 0.0;
    for (double v : h.data()) worst = std::max(worst, std::abs(v - expect_h[idx++]));
    REQUIRE(worst <= 1e-9);

    Tensor scores = alignment::concept_scores(fx.maps, fx.embeddings);
    REQUIRE(scores.rows() == 3 && scores.cols() == 4);
    double worst_pool = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        worst_pool = std::max(worst_pool, std::abs(scores[i] - fx.expected_scores[i]));
    note("worst pooled-score deviation " + fmt(worst_pool, 12));
    REQUIRE(worst_pool <= 1e-9);

    Tensor labels = alignment::threshold_labels(scores, 0.65);
    bool labels_exact = true;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] != fx.expected_labels[i]) labels_exact = false;
    REQUIRE(labels_exact);

    Tensor boundary = Tensor::matrix(1, 2, {0.44, 0.45});
    auto kept = alignment::prune_low_similarity(boundary);
    REQUIRE(kept == std::vector<std::size_t>{1});
    note("0.44 pruned, 0.45 retained at the projection floor");
    return ok;
}

// ---------------------------------------------------------------------------
// 5. Filter ablations on the engineered 40-concept pool: every stage removes
//    exactly its five-concept group, disabling a stage restores exactly that
//    group, and the full pipeline retains exactly the 20 engineered keepers.
//    Set equality, no tolerance.

bool crit_filter_ablation() {
    bool ok = true;
    auto fx = testutil::make_filter_fixture();

    auto kept_of = [&](const alignment::FilterConfig& c) {
        return alignment::filter_concepts(fx.pool, fx.scores, c).retained_indices;
    };
    auto with_group = [&](const std::vector<std::size_t>& extra) {
        std::vector<std::size_t> want = fx.kept_all;
        want.insert(want.end(), extra.begin(), extra.end());
        std::sort(want.begin(), want.end());
        return want;
    };

    alignment::FilterConfig all_on;
    auto retained = kept_of(all_on);
    REQUIRE(retained == fx.kept_all);
    note("all filters: " + std::to_string(retained.size()) + " of 40 retained");

    alignment::FilterConfig no_len = all_on;
    no_len.length_filter = false;
    REQUIRE(kept_of(no_len) == with_group(fx.group_length));

    alignment::FilterConfig no_cls = all_on;
    no_cls.class_similarity_filter = false;
    REQUIRE(kept_of(no_cls) == with_group(fx.group_class));

    alignment::FilterConfig no_pair = all_on;
    no_pair.pairwise_filter = false;
    REQUIRE(kept_of(no_pair) == with_group(fx.group_pair));

    alignment::FilterConfig no_proj = all_on;
    no_proj.projection_filter = false;
    REQUIRE(kept_of(no_proj) == with_group(fx.group_proj));
    note("each disabled stage restores exactly its engineered group of 5");
    return ok;
}

// ---------------------------------------------------------------------------
// 6. The auxiliary losses earn their keep on the planted dataset: with the
//    concept loss enabled (weight 0.1) the final concept error is strictly
//    below the paired run without it, and the full-loss run's fused accuracy
//    is within 0.02 of every single-auxiliary run.

bool crit_loss_ablation() {
    bool ok = true;

    data::SyntheticSpec spec;
    spec.seed = 1;
    auto synth = data::gen_synthetic(spec, work_dir() / "ablation_data");

    model::ModelConfig cfg;
    cfg.n_classes = 2;
    cfg.n_concepts = 4;
    cfg.feature_dim = synth.dataset.features.cols();
    cfg.semantics = nsym::RuleSemantics::grounded;

    auto run = [&](double l1, double l2) {
        model::Hyperparams hp;
        hp.lambda1 = l1;
        hp.lambda2 = l2;
        hp.learning_rate = 5e-4;
        hp.epochs = 100;
        hp.seed = 1;
        model::TrainResult tr = model::train(synth.dataset, cfg, hp);
        model::Evaluation ev = model::evaluate(synth.dataset, tr.params, cfg);
        return std::make_pair(tr.curve.back().losses.concept_loss, ev.fused.accuracy);
    };

    auto [lc_full, acc_full] = run(0.1, 0.1);
    auto [lc_off, acc_no_concept] = run(0.0, 0.1);
    auto [lc_nn, acc_no_neural] = run(0.1, 0.0);
    (void)lc_nn;

    note("final concept loss: " + fmt(lc_full) + " with supervision vs " + fmt(lc_off) +
         " without");
    REQUIRE(lc_full < lc_off);

    note("fused accuracy: full " + fmt(acc_full) + ", concept-loss only " +
         fmt(acc_no_neural) + ", rule-loss only " + fmt(acc_no_concept));
    REQUIRE(acc_full >= acc_no_concept - 0.02);
    REQUIRE(acc_full >= acc_no_neural - 0.02);
    return ok;
}

// ---------------------------------------------------------------------------
// 7. Metrics against closed-form oracles: accuracy/precision/recall/F1 on
//    1000 random confusion tables match the ratio formulas exactly, and the
//    rank-based AUC equals brute-force pair counting exactly on random
//    instances of up to 50 samples (ties included).

bool crit_metric_oracles() {
    bool ok = true;
    Rng rng(8081);

    std::size_t checked = 0;
    for (int t = 0; t < 1000; ++t) {
        metrics::ConfusionCounts c;
        c.tp = rng.index(40);
        c.tn = rng.index(40);
        c.fp = rng.index(40);
        c.fn = rng.index(40);
        if (c.total() == 0) c.tn = 1;
        auto m = metrics::classification_metrics(c);

        double tp = double(c.tp), tn = double(c.tn), fp = double(c.fp), fn = double(c.fn);
        REQUIRE(m.accuracy == (tp + tn) / (tp + tn + fp + fn));
        REQUIRE(m.precision.has_value() == (c.tp + c.fp > 0));
        if (m.precision) REQUIRE(*m.precision == tp / (tp + fp));
        REQUIRE(m.recall.has_value() == (c.tp + c.fn > 0));
        if (m.recall) REQUIRE(*m.recall == tp / (tp + fn));
        if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
            REQUIRE(m.f1.has_value());
            if (m.f1)
                REQUIRE(*m.f1 ==
                        2.0 * *m.precision * *m.recall / (*m.precision + *m.recall));
        } else {
            REQUIRE(!m.f1.has_value());
        }
        ++checked;
    }
    note(std::to_string(checked) + " confusion tables, ratios exact");

    std::size_t auc_cases = 0;
    for (int t = 0; t < 300; ++t) {
        std::size_t n = 2 + rng.index(49);
        std::vector<double> scores(n);
        std::vector<std::uint8_t> labels(n);
        // Scores on a coarse grid so ties are exact by construction.
        for (std::size_t i = 0; i < n; ++i)
            scores[i] = static_cast<double>(rng.index(10)) / 10.0;
        std::size_t pos = 0;
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = static_cast<std::uint8_t>(rng.index(2));
            pos += labels[i];
        }
        if (pos == 0) labels[0] = 1, pos = 1;
        if (pos == n) labels[0] = 0, pos -= 1;

        double concordant = 0.0;
        std::size_t neg = n - pos;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (!labels[i] || labels[j]) continue;
                if (scores[i] > scores[j]) concordant += 1.0;
                else if (scores[i] == scores[j]) concordant += 0.5;
            }
        double oracle = concordant / (double(pos) * double(neg));
        REQUIRE(metrics::auc(scores, labels) == oracle);
        ++auc_cases;
    }
    note(std::to_string(auc_cases) + " AUC instances (n <= 50), pair counting exact");
    return ok;
}

// ---------------------------------------------------------------------------
// 8. Stability harness neutrality and determinism: zero perturbation yields
//    exactly zero flip fraction, zero indicator change and zero rule change;
//    a positive-epsilon run with a fixed seed reproduces bit for bit.

bool crit_stability() {
    bool ok = true;

    data::SyntheticSpec spec;
    spec.samples_per_class = 10;
    spec.feature_dim = 6;
    spec.seed = 5;
    auto synth = data::gen_synthetic(spec, work_dir() / "stability_data");

    model::ModelConfig cfg;
    cfg.n_classes = 2;
    cfg.n_concepts = 4;
    cfg.feature_dim = 6;
    cfg.embed_dim = 4;
    cfg.hidden_dim = 4;
    ParamMap params;
    Rng rng(17);
    model::init_model_params(params, cfg, rng);

    stability::PerturbationConfig zero{0.0, 4, 3};
    auto rz = stability::perturb_stability(synth.dataset, params, cfg, zero);
    REQUIRE(rz.class_flip_fraction == 0.0);
    REQUIRE(rz.max_indicator_change == 0.0);
    REQUIRE(rz.rule_change_fraction == 0.0);
    note("epsilon 0: all statistics exactly zero");

    stability::PerturbationConfig live{0.5, 4, 3};
    auto r1 = stability::perturb_stability(synth.dataset, params, cfg, live);
    auto r2 = stability::perturb_stability(synth.dataset, params, cfg, live);
    REQUIRE(stability::stability_to_json(r1).dump() == stability::stability_to_json(r2).dump());
    note("epsilon 0.5 twice with one seed: reports byte-identical");
    return ok;
}

// ---------------------------------------------------------------------------
// 9. Serialization round trips: tensors of each rank, checkpoints, dataset
//    manifests and concept-label CSVs all survive save -> load -> save with
//    a byte-identical second artifact.

bool crit_round_trips() {
    bool ok = true;
    fs::path dir = work_dir() / "round_trips";
    fs::create_directories(dir);
    Rng rng(23);

    for (auto shape : std::vector<std::vector<std::size_t>>{{7}, {3, 4}, {2, 3, 2}}) {
        Tensor t = testutil::random_tensor(rng, shape);
        fs::path p1 = dir / ("t" + std::to_string(shape.size()) + "_a.micn");
        fs::path p2 = dir / ("t" + std::to_string(shape.size()) + "_b.micn");
        save_tensor(p1, t);
        save_tensor(p2, load_tensor(p1));
        REQUIRE(read_bytes(p1) == read_bytes(p2));
    }
    note("tensor files: ranks 1-3 byte-stable");

    data::SyntheticSpec spec;
    spec.samples_per_class = 8;
    spec.feature_dim = 5;
    spec.seed = 9;
    auto synth = data::gen_synthetic(spec, dir / "data");

    model::ModelConfig cfg;
    cfg.n_classes = 2;
    cfg.n_concepts = 4;
    cfg.feature_dim = 5;
    cfg.embed_dim = 4;
    cfg.hidden_dim = 4;
    model::Hyperparams hp;
    hp.learning_rate = 1e-3;
    hp.epochs = 3;
    hp.concept_epochs = 1;
    hp.batch_size = 8;
    hp.seed = 2;
    model::TrainResult tr = model::train(synth.dataset, cfg, hp);

    fs::path ck1 = dir / "ck1", ck2 = dir / "ck2";
    model::save_checkpoint(ck1, {cfg, hp, tr.params, tr.adam, hp.epochs});
    model::Checkpoint loaded = model::load_checkpoint(ck1);
    model::save_checkpoint(ck2, loaded);
    std::string why;
    bool same = same_tree(ck1, ck2, why);
    if (!same) note("checkpoint mismatch: " + why);
    REQUIRE(same);
    note("checkpoint: " + std::to_string(tr.params.size()) + " parameter tensors plus "
         "optimizer state byte-stable");

    fs::path m1 = dir / "manifest_a.json", m2 = dir / "manifest_b.json";
    data::save_manifest(m1, synth.manifest);
    data::save_manifest(m2, data::load_manifest(m1));
    REQUIRE(read_bytes(m1) == read_bytes(m2));

    data::ConceptCsv csv;
    csv.ids = {"s0", "s1", "s2"};
    csv.names = {"ridge", "halo"};
    csv.bits = Tensor::matrix(3, 2, {1, 0, 0, 1, 1, 1});
    fs::path c1 = dir / "labels_a.csv", c2 = dir / "labels_b.csv";
    data::write_concept_csv(c1, csv);
    data::write_concept_csv(c2, data::read_concept_csv(c1));
    REQUIRE(read_bytes(c1) == read_bytes(c2));
    note("manifest and concept CSV byte-stable");
    return ok;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        bool (*fn)();
    };
    const Criterion criteria[] = {
        {"gradients match central finite differences", crit_gradients},
        {"rule aggregation equals classical logic on Boolean inputs", crit_rule_aggregation},
        {"planted rules are recovered end to end", crit_rule_recovery},
        {"concept labeling matches hand-computed cosines", crit_labeling},
        {"each concept filter removes exactly its engineered group", crit_filter_ablation},
        {"auxiliary losses improve their targets without costing accuracy",
         crit_loss_ablation},
        {"classification metrics match closed-form oracles", crit_metric_oracles},
        {"zero perturbation is neutral and stability runs are reproducible",
         crit_stability},
        {"artifacts survive save-load-save byte-identically", crit_round_trips},
    };

    int failed = 0;
    int index = 0;
    for (const auto& c : criteria) {
        ++index;
        g_notes.clear();
        bool ok = false;
        try {
            ok = c.fn();
        } catch (const std::exception& e) {
            note(std::string("unhandled exception: ") + e.what());
        }
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << index << ". " << c.name << "\n";
        for (const auto& n : g_notes) std::cout << "       " << n << "\n";
        if (!ok) ++failed;
    }

    std::cout << (failed ? "ACCEPTANCE FAILED: " : "ACCEPTANCE OK: ")
              << (sizeof(criteria) / sizeof(criteria[0]) - failed) << "/"
              << sizeof(criteria) / sizeof(criteria[0]) << " criteria passed\n";
    return failed ? 1 : 0;
}
