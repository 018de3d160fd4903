#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "micns/alignment.hpp"
#include "micns/dataset.hpp"
#include "micns/errors.hpp"
#include "micns/fuzzy.hpp"
#include "micns/metrics.hpp"
#include "micns/model.hpp"
#include "micns/stability.hpp"
#include "micns/tensor_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace micns;

namespace {

fs::path resolve_out(const std::string& flag_value, const char* subcommand) {
    fs::path dir;
    if (!flag_value.empty()) {
        dir = flag_value;
    } else if (const char* root = std::getenv("MICNS_OUTPUT_ROOT")) {
        dir = fs::path(root) / subcommand;
    } else {
        dir = fs::path(subcommand) += "-out";
    }
    fs::create_directories(dir);
    return dir;
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(IoError::Code::open_failed, "cannot open '" + path.string() + "'");
    f << j.dump(2) << "\n";
    if (!f) throw IoError(IoError::Code::open_failed, "failed writing '" + path.string() + "'");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(IoError::Code::open_failed, "cannot open '" + path.string() + "'");
    f << text;
    if (!f) throw IoError(IoError::Code::open_failed, "failed writing '" + path.string() + "'");
}

fs::path manifest_path(const std::string& data) {
    fs::path p(data);
    if (fs::is_directory(p)) p /= "manifest.json";
    return p;
}

std::string sanitize(const std::string& s) {
    std::string out = s;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '_')
            c = '_';
    return out;
}

/// 8-bit PGM, min-max normalized per map; a flat map renders black.
void write_pgm(const fs::path& path, const Tensor& heatmap) {
    if (heatmap.rank() != 2)
        throw ShapeError("saliency export needs an HxW map, got " + heatmap.shape_str());
    double lo = heatmap[0], hi = heatmap[0];
    for (std::size_t i = 0; i < heatmap.size(); ++i) {
        lo = std::min(lo, heatmap[i]);
        hi = std::max(hi, heatmap[i]);
    }
    std::string bytes;
    bytes.reserve(heatmap.size());
    for (std::size_t i = 0; i < heatmap.size(); ++i) {
        double v = hi > lo ? (heatmap[i] - lo) / (hi - lo) : 0.0;
        bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
    std::string header = "P5\n" + std::to_string(heatmap.cols()) + " " +
                         std::to_string(heatmap.rows()) + "\n255\n";
    write_text(path, header + bytes);
}

alignment::ConceptSet concept_set_for(const data::DatasetManifest& manifest,
                                      const std::string& flag_value) {
    if (!flag_value.empty()) return alignment::load_concept_set(flag_value);
    if (!manifest.concept_set.empty())
        return alignment::load_concept_set(manifest.base_dir / manifest.concept_set);
    throw ValueError("no concept set: pass --concepts or list one in the manifest");
}

Tensor embedding_row(const Tensor& embeddings, std::size_t i) {
    Tensor row({embeddings.cols()});
    for (std::size_t d = 0; d < embeddings.cols(); ++d) row[d] = embeddings.at(i, d);
    return row;
}

void export_saliency(const fs::path& dir, const std::string& sample_id,
                     const Tensor& feature_map, const alignment::ConceptSet& cs) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < cs.size(); ++i) {
        Tensor hm = alignment::compute_heatmap(feature_map, embedding_row(cs.embeddings, i));
        fs::path stem = dir / (sanitize(sample_id) + "_c" + std::to_string(i));
        write_pgm(fs::path(stem) += ".pgm", hm);
        save_tensor(fs::path(stem) += ".micn", hm);
    }
}

std::string fmt(double v) { return json(v).dump(); }

fuzzy::Literal parse_literal(const std::string& token) {
    std::string t;
    for (char c : token)
        if (!std::isspace(static_cast<unsigned char>(c))) t.push_back(c);
    fuzzy::Literal lit;
    std::size_t pos = 0;
    if (pos < t.size() && t[pos] == '!') {
        lit.positive = false;
        ++pos;
    }
    if (pos < t.size() && t[pos] == 'c') ++pos;
    if (pos < t.size() && t[pos] == '_') ++pos;
    if (pos >= t.size() || t.find_first_not_of("0123456789", pos) != std::string::npos)
        throw ValueError("cannot parse literal '" + token + "' (expected e.g. c0 or !c1)");
    lit.concept_index = std::stoul(t.substr(pos));
    return lit;
}

/// "0:!c0,c1;1:c0,!c1" -> one conjunctive rule per class.
std::vector<fuzzy::ConjunctiveRule> parse_rules(const std::string& text) {
    std::vector<fuzzy::ConjunctiveRule> rules;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ';')) {
        auto colon = part.find(':');
        if (colon == std::string::npos)
            throw ValueError("rule '" + part + "' is missing the class prefix 'CLASS:'");
        std::string head = part.substr(0, colon);
        std::size_t pos = 0;
        while (pos < head.size() && std::isspace(static_cast<unsigned char>(head[pos]))) ++pos;
        if (pos < head.size() && head[pos] == 'y') ++pos;
        if (pos < head.size() && head[pos] == '_') ++pos;
        std::string digits = head.substr(pos);
        if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
            throw ValueError("cannot parse class index '" + head + "'");
        fuzzy::ConjunctiveRule rule;
        rule.class_index = std::stoul(digits);
        std::stringstream body(part.substr(colon + 1));
        std::string tok;
        while (std::getline(body, tok, ','))
            if (tok.find_first_not_of(" \t") != std::string::npos)
                rule.literals.push_back(parse_literal(tok));
        rules.push_back(rule.normalized());
    }
    return rules;
}

model::ModelConfig config_with_semantics(model::ModelConfig cfg, const std::string& flag) {
    if (!flag.empty()) cfg.semantics = nsym::rule_semantics_from_string(flag);
    return cfg;
}

json explanation_json(const data::Dataset& dataset, const model::Evaluation& ev,
                      std::size_t b) {
    const auto& ex = ev.explanations[b];
    json j;
    j["id"] = dataset.ids[b];
    j["label"] = dataset.labels[b];
    j["fused_class"] = ev.fused_predictions[b];
    j["rule_class"] = ex.predicted_class;
    j["rule"] = fuzzy::format_rule(ex.rule, dataset.concept_names);
    j["rule_truth"] = ex.neural_score;
    j["concept_bits"] = ex.concept_bits;
    std::vector<double> scores;
    for (std::size_t i = 0; i < ev.outputs.concept_probs.cols(); ++i)
        scores.push_back(ev.outputs.concept_probs.at(b, i));
    j["concept_scores"] = scores;
    return j;
}

// ---------------------------------------------------------------------------

struct FilterOpts {
    std::string concepts, scores, out;
    bool no_length = false, no_class = false, no_pairwise = false;
    bool no_similarity = false, no_projection = false;
    std::size_t max_name_length = 30;
    double class_threshold = 0.85, pairwise_threshold = 0.9, projection_floor = 0.45;
};

int run_filter(const FilterOpts& o) {
    alignment::FilterConfig cfg;
    cfg.length_filter = !o.no_length;
    cfg.class_similarity_filter = !(o.no_class || o.no_similarity);
    cfg.pairwise_filter = !(o.no_pairwise || o.no_similarity);
    cfg.projection_filter = !o.no_projection;
    cfg.max_name_length = o.max_name_length;
    cfg.class_similarity_threshold = o.class_threshold;
    cfg.pairwise_threshold = o.pairwise_threshold;
    cfg.projection_floor = o.projection_floor;

    alignment::ConceptSet pool = alignment::load_concept_set(o.concepts);
    Tensor scores;
    if (!o.scores.empty()) scores = load_tensor(o.scores);
    alignment::FilterResult result = alignment::filter_concepts(pool, scores, cfg);

    fs::path out = resolve_out(o.out, "filter-concepts");
    alignment::save_concept_set(out / "concepts.json", result.retained);
    write_json_file(out / "provenance.json", alignment::filter_provenance_json(result, cfg));

    json rc;
    rc["subcommand"] = "filter-concepts";
    rc["concepts"] = o.concepts;
    rc["scores"] = o.scores;
    rc["length_filter"] = cfg.length_filter;
    rc["max_name_length"] = cfg.max_name_length;
    rc["class_similarity_filter"] = cfg.class_similarity_filter;
    rc["class_similarity_threshold"] = cfg.class_similarity_threshold;
    rc["pairwise_filter"] = cfg.pairwise_filter;
    rc["pairwise_threshold"] = cfg.pairwise_threshold;
    rc["projection_filter"] = cfg.projection_filter;
    rc["projection_floor"] = cfg.projection_floor;
    write_json_file(out / "resolved_config.json", rc);

    std::cout << "retained " << result.retained.size() << " of " << pool.size()
              << " concepts\n";
    return 0;
}

struct LabelOpts {
    std::string data, concepts, out;
    double tau = 0.65;
    bool heatmaps = false;
};

int run_label(const LabelOpts& o) {
    data::DatasetManifest manifest = data::load_manifest(manifest_path(o.data));
    data::Dataset dataset = data::load_dataset(manifest, true);
    alignment::ConceptSet cs = concept_set_for(manifest, o.concepts);
    if (!cs.has_embeddings())
        throw ValueError("concept set has no embeddings; labeling needs them");

    Tensor scores = alignment::concept_scores(dataset.feature_maps, cs.embeddings);
    Tensor labels = alignment::threshold_labels(scores, o.tau);

    fs::path out = resolve_out(o.out, "label");
    data::write_concept_csv(out / "concept_labels.csv", {dataset.ids, cs.names, labels});
    save_tensor(out / "scores.micn", scores);
    if (o.heatmaps)
        for (std::size_t b = 0; b < dataset.size(); ++b)
            export_saliency(out / "heatmaps", dataset.ids[b], dataset.feature_maps[b], cs);

    json rc;
    rc["subcommand"] = "label";
    rc["data"] = o.data;
    rc["concepts"] = o.concepts;
    rc["tau"] = o.tau;
    rc["heatmaps"] = o.heatmaps;
    write_json_file(out / "resolved_config.json", rc);

    std::size_t positives = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) positives += labels[i] == 1.0;
    std::cout << "labeled " << dataset.size() << " samples x " << cs.size()
              << " concepts, " << positives << " positive bits\n";
    return 0;
}

struct GenSynthOpts {
    std::string out, rules;
    std::size_t concepts = 4, classes = 2, per_class = 200, feature_dim = 16;
    double sigma = 0.05;
    std::uint64_t seed = 1;
};

int run_gen_synth(const GenSynthOpts& o) {
    data::SyntheticSpec spec;
    spec.n_concepts = o.concepts;
    spec.n_classes = o.classes;
    spec.samples_per_class = o.per_class;
    spec.feature_dim = o.feature_dim;
    spec.noise_sigma = o.sigma;
    spec.seed = o.seed;
    if (!o.rules.empty()) spec.rules = parse_rules(o.rules);

    fs::path out = resolve_out(o.out, "gen-synth");
    data::SyntheticResult result = data::gen_synthetic(spec, out);

    json rc;
    rc["subcommand"] = "gen-synth";
    rc["concepts"] = spec.n_concepts;
    rc["classes"] = spec.n_classes;
    rc["per_class"] = spec.samples_per_class;
    rc["feature_dim"] = spec.feature_dim;
    rc["sigma"] = spec.noise_sigma;
    rc["seed"] = spec.seed;
    std::vector<std::string> planted;
    for (const auto& r : result.rules) planted.push_back(fuzzy::format_rule(r));
    rc["rules"] = planted;
    write_json_file(out / "resolved_config.json", rc);

    std::cout << "wrote " << result.dataset.size() << " samples to " << out.string() << "\n";
    return 0;
}

struct TrainOpts {
    std::string data, out, semantics;
    std::size_t embed_dim = 16, hidden_dim = 32;
    double lambda1 = 0.1, lambda2 = 0.1, lr = 5e-5;
    std::size_t epochs = 100, concept_epochs = 0, batch_size = 32;
    std::uint64_t seed = 1;
    bool no_concept_loss = false, no_neural_loss = false;
};

int run_train(const TrainOpts& o) {
    data::DatasetManifest manifest = data::load_manifest(manifest_path(o.data));
    data::Dataset dataset = data::load_dataset(manifest);
    if (dataset.concept_labels.empty())
        throw ValueError("training needs concept labels; run 'label' first or point "
                         "--data at a manifest with a concept CSV");

    model::ModelConfig cfg;
    cfg.n_classes = dataset.n_classes;
    cfg.n_concepts = dataset.concept_labels.cols();
    cfg.feature_dim = dataset.features.cols();
    cfg.embed_dim = o.embed_dim;
    cfg.hidden_dim = o.hidden_dim;
    cfg = config_with_semantics(cfg, o.semantics);

    model::Hyperparams hyper;
    hyper.lambda1 = o.no_concept_loss ? 0.0 : o.lambda1;
    hyper.lambda2 = o.no_neural_loss ? 0.0 : o.lambda2;
    hyper.learning_rate = o.lr;
    hyper.epochs = o.epochs;
    hyper.concept_epochs = o.concept_epochs;
    hyper.batch_size = o.batch_size;
    hyper.seed = o.seed;

    model::TrainResult result = model::train(dataset, cfg, hyper);

    fs::path out = resolve_out(o.out, "train");
    model::save_checkpoint(out / "checkpoint",
                           {cfg, hyper, result.params, result.adam, hyper.epochs});
    model::write_loss_curve_csv(out / "loss_curve.csv", result.curve);

    json rc;
    rc["subcommand"] = "train";
    rc["data"] = o.data;
    rc["embed_dim"] = cfg.embed_dim;
    rc["hidden_dim"] = cfg.hidden_dim;
    rc["semantics"] = nsym::rule_semantics_name(cfg.semantics);
    rc["n_classes"] = cfg.n_classes;
    rc["n_concepts"] = cfg.n_concepts;
    rc["feature_dim"] = cfg.feature_dim;
    rc["lambda1"] = hyper.lambda1;
    rc["lambda2"] = hyper.lambda2;
    rc["learning_rate"] = hyper.learning_rate;
    rc["epochs"] = hyper.epochs;
    rc["concept_epochs"] = hyper.concept_epochs;
    rc["batch_size"] = hyper.batch_size;
    rc["seed"] = hyper.seed;
    write_json_file(out / "resolved_config.json", rc);

    if (!result.curve.empty()) {
        const auto& last = result.curve.back().losses;
        std::cout << "trained " << hyper.epochs << " epochs, final loss "
                  << fmt(last.total) << " (task " << fmt(last.task_loss) << ", concepts "
                  << fmt(last.concept_loss) << ", rules " << fmt(last.neural_loss) << ")\n";
    } else {
        std::cout << "trained 0 epochs (initialization only)\n";
    }
    return 0;
}

struct EvalOpts {
    std::string data, model_dir, out, semantics;
};

int run_eval(const EvalOpts& o) {
    data::DatasetManifest manifest = data::load_manifest(manifest_path(o.data));
    data::Dataset dataset = data::load_dataset(manifest);
    model::Checkpoint ckpt = model::load_checkpoint(o.model_dir);
    model::ModelConfig cfg = config_with_semantics(ckpt.config, o.semantics);

    model::Evaluation ev = model::evaluate(dataset, ckpt.params, cfg);

    fs::path out = resolve_out(o.out, "eval");
    json mj;
    mj["fused"] = metrics::report_to_json(ev.fused);
    mj["neural"] = metrics::report_to_json(ev.neural);
    mj["rule_fidelity"] = {{"mean", ev.rules.fidelity.mean},
                           {"se", ev.rules.fidelity.se},
                           {"n", ev.rules.fidelity.n}};
    write_json_file(out / "metrics.json", mj);

    auto summary = [&](const metrics::MulticlassReport& r) {
        if (r.n_classes == 2) return metrics::binary_summary(r);
        metrics::BinaryMetrics bm;
        bm.accuracy = r.accuracy;
        return bm;
    };
    write_text(out / "metrics.csv",
               metrics::metrics_csv({{"fused", summary(ev.fused)},
                                     {"neural", summary(ev.neural)}}));
    write_json_file(out / "rules.json",
                    fuzzy::rule_set_to_json(ev.rules, dataset.concept_names));

    std::string pred = "id,label,fused,neural\n";
    for (std::size_t b = 0; b < dataset.size(); ++b)
        pred += dataset.ids[b] + "," + std::to_string(dataset.labels[b]) + "," +
                std::to_string(ev.fused_predictions[b]) + "," +
                std::to_string(ev.neural_predictions[b]) + "\n";
    write_text(out / "predictions.csv", pred);

    json rc;
    rc["subcommand"] = "eval";
    rc["data"] = o.data;
    rc["model"] = o.model_dir;
    rc["semantics"] = nsym::rule_semantics_name(cfg.semantics);
    write_json_file(out / "resolved_config.json", rc);

    std::cout << "fused accuracy " << fmt(ev.fused.accuracy) << ", rule-head accuracy "
              << fmt(ev.neural.accuracy) << ", rule fidelity error "
              << fmt(ev.rules.fidelity.mean) << "\n";
    for (std::size_t j = 0; j < cfg.n_classes; ++j)
        if (!ev.rules.per_class[j].empty())
            std::cout << "class " << j << " top rule: "
                      << fuzzy::format_rule(ev.rules.top_rule(j), dataset.concept_names)
                      << " (support " << ev.rules.top_rule(j).support << ")\n";
    return 0;
}

struct ExplainOpts {
    std::string data, model_dir, out, semantics, concepts;
    std::vector<std::string> samples;
    bool saliency = false;
};

int run_explain(const ExplainOpts& o) {
    data::DatasetManifest manifest = data::load_manifest(manifest_path(o.data));
    data::Dataset dataset = data::load_dataset(manifest, o.saliency);
    model::Checkpoint ckpt = model::load_checkpoint(o.model_dir);
    model::ModelConfig cfg = config_with_semantics(ckpt.config, o.semantics);

    std::vector<std::size_t> selected;
    if (o.samples.empty()) {
        for (std::size_t b = 0; b < dataset.size(); ++b) selected.push_back(b);
    } else {
        for (const auto& id : o.samples) {
            auto it = std::find(dataset.ids.begin(), dataset.ids.end(), id);
            if (it == dataset.ids.end())
                throw ValueError("sample id '" + id + "' is not in the dataset");
            selected.push_back(static_cast<std::size_t>(it - dataset.ids.begin()));
        }
    }

    model::Evaluation ev = model::evaluate(dataset, ckpt.params, cfg);

    fs::path out = resolve_out(o.out, "explain");
    json arr = json::array();
    for (std::size_t b : selected) arr.push_back(explanation_json(dataset, ev, b));
    write_json_file(out / "explanations.json", arr);

    if (o.saliency) {
        alignment::ConceptSet cs = concept_set_for(manifest, o.concepts);
        if (!cs.has_embeddings())
            throw ValueError("concept set has no embeddings; saliency needs them");
        for (std::size_t b : selected)
            export_saliency(out / "saliency", dataset.ids[b], dataset.feature_maps[b], cs);
    }

    json rc;
    rc["subcommand"] = "explain";
    rc["data"] = o.data;
    rc["model"] = o.model_dir;
    rc["semantics"] = nsym::rule_semantics_name(cfg.semantics);
    rc["samples"] = o.samples;
    rc["saliency"] = o.saliency;
    write_json_file(out / "resolved_config.json", rc);

    for (std::size_t b : selected) {
        const auto& ex = ev.explanations[b];
        std::cout << dataset.ids[b] << ": "
                  << fuzzy::format_rule(ex.rule, dataset.concept_names) << " (truth "
                  << fmt(ex.neural_score) << ", fused class " << ev.fused_predictions[b]
                  << ")\n";
    }
    return 0;
}

struct StabilityOpts {
    std::string data, model_dir, out, semantics;
    double epsilon = 0.03;
    std::size_t draws = 8;
    std::uint64_t seed = 0;
};

int run_stability(const StabilityOpts& o) {
    data::DatasetManifest manifest = data::load_manifest(manifest_path(o.data));
    data::Dataset dataset = data::load_dataset(manifest);
    model::Checkpoint ckpt = model::load_checkpoint(o.model_dir);
    model::ModelConfig cfg = config_with_semantics(ckpt.config, o.semantics);

    stability::PerturbationConfig pcfg{o.epsilon, o.draws, o.seed};
    stability::StabilityReport report =
        stability::perturb_stability(dataset, ckpt.params, cfg, pcfg);

    fs::path out = resolve_out(o.out, "stability");
    write_json_file(out / "stability.json", stability::stability_to_json(report));

    json rc;
    rc["subcommand"] = "stability";
    rc["data"] = o.data;
    rc["model"] = o.model_dir;
    rc["epsilon"] = o.epsilon;
    rc["draws"] = o.draws;
    rc["seed"] = o.seed;
    write_json_file(out / "resolved_config.json", rc);

    std::cout << "epsilon " << fmt(report.epsilon) << ": class flips "
              << fmt(report.class_flip_fraction) << ", max indicator change "
              << fmt(report.max_indicator_change) << ", rule changes "
              << fmt(report.rule_change_fraction) << "\n";
    return 0;
}

struct WeightsOpts {
    std::string model_dir, data, out;
};

int run_report_weights(const WeightsOpts& o) {
    model::Checkpoint ckpt = model::load_checkpoint(o.model_dir);
    const model::ModelConfig& cfg = ckpt.config;
    const Tensor& w = ckpt.params.at("fusion.w");

    std::vector<std::string> names;
    if (!o.data.empty()) {
        data::DatasetManifest manifest = data::load_manifest(manifest_path(o.data));
        data::Dataset dataset = data::load_dataset(manifest);
        names = dataset.concept_names;
        if (!names.empty() && names.size() != cfg.n_concepts)
            throw ValueError("dataset names " + std::to_string(names.size()) +
                             " concepts but the model has " +
                             std::to_string(cfg.n_concepts));
    }

    // Absolute mass of each concept's embedding block, L1-normalized per class.
    std::vector<std::vector<double>> share(cfg.n_concepts,
                                           std::vector<double>(cfg.n_classes, 0.0));
    for (std::size_t j = 0; j < cfg.n_classes; ++j) {
        double total = 0.0;
        for (std::size_t i = 0; i < cfg.n_concepts; ++i) {
            double mass = 0.0;
            for (std::size_t r = 0; r < cfg.embed_dim; ++r)
                mass += std::fabs(w.at(cfg.feature_dim + i * cfg.embed_dim + r, j));
            share[i][j] = mass;
            total += mass;
        }
        if (total > 0.0)
            for (std::size_t i = 0; i < cfg.n_concepts; ++i) share[i][j] /= total;
    }

    std::string csv = "concept,class,weight\n";
    for (std::size_t i = 0; i < cfg.n_concepts; ++i)
        for (std::size_t j = 0; j < cfg.n_classes; ++j) {
            std::string cname = i < names.size() ? names[i] : "c_" + std::to_string(i);
            csv += cname + ",y_" + std::to_string(j) + "," + fmt(share[i][j]) + "\n";
        }

    fs::path out = resolve_out(o.out, "report-weights");
    write_text(out / "weights.csv", csv);

    json rc;
    rc["subcommand"] = "report-weights";
    rc["model"] = o.model_dir;
    rc["data"] = o.data;
    write_json_file(out / "resolved_config.json", rc);

    for (std::size_t j = 0; j < cfg.n_classes; ++j) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < cfg.n_concepts; ++i)
            if (share[i][j] > share[best][j]) best = i;
        std::string cname = best < names.size() ? names[best] : "c_" + std::to_string(best);
        std::cout << "class " << j << " heaviest concept: " << cname << " ("
                  << fmt(share[best][j]) << ")\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Concept reasoning pipeline: filtering, pseudo-labeling, joint "
                 "rule/classifier training, and explanation export"};
    app.require_subcommand(1);

    FilterOpts fo;
    auto* filter = app.add_subcommand("filter-concepts",
                                      "Run the concept pool through the fixed filter chain");
    filter->add_option("--concepts", fo.concepts, "concept set JSON")->required();
    filter->add_option("--scores", fo.scores,
                       "pooled concept-score tensor feeding the projection stage");
    filter->add_option("--out", fo.out, "output directory");
    filter->add_flag("--no-length-filter", fo.no_length, "keep long names");
    filter->add_flag("--no-class-filter", fo.no_class, "skip class-similarity pruning");
    filter->add_flag("--no-pairwise-filter", fo.no_pairwise, "skip duplicate pruning");
    filter->add_flag("--no-similarity-filter", fo.no_similarity,
                     "skip both similarity stages (class and pairwise)");
    filter->add_flag("--no-projection-filter", fo.no_projection, "skip score pruning");
    filter->add_option("--max-name-length", fo.max_name_length, "length cutoff")->capture_default_str();
    filter->add_option("--class-threshold", fo.class_threshold,
                       "drop at cosine-to-class >= this")->capture_default_str();
    filter->add_option("--pairwise-threshold", fo.pairwise_threshold,
                       "drop the later twin at cosine >= this")->capture_default_str();
    filter->add_option("--projection-floor", fo.projection_floor,
                       "drop when the best score stays below this")->capture_default_str();

    LabelOpts lo;
    auto* label = app.add_subcommand("label", "Pseudo-label samples from pooled "
                                              "concept-heatmap scores");
    label->add_option("--data", lo.data, "dataset manifest (file or directory)")->required();
    label->add_option("--concepts", lo.concepts, "concept set JSON (default: manifest's)");
    label->add_option("--tau", lo.tau, "labeling threshold")->capture_default_str();
    label->add_option("--out", lo.out, "output directory");
    label->add_flag("--heatmaps", lo.heatmaps, "also export per-concept heatmaps");

    GenSynthOpts go;
    auto* gen = app.add_subcommand("gen-synth", "Generate a planted-rule synthetic dataset");
    gen->add_option("--out", go.out, "output directory");
    gen->add_option("--concepts", go.concepts, "number of concepts")->capture_default_str();
    gen->add_option("--classes", go.classes, "number of classes")->capture_default_str();
    gen->add_option("--per-class", go.per_class, "samples per class")->capture_default_str();
    gen->add_option("--feature-dim", go.feature_dim, "feature width")->capture_default_str();
    gen->add_option("--sigma", go.sigma, "feature noise level")->capture_default_str();
    gen->add_option("--seed", go.seed, "generator seed")->capture_default_str();
    gen->add_option("--rules", go.rules, "planted rules, e.g. '0:!c0,c1;1:c0,!c1'");

    TrainOpts to;
    auto* train = app.add_subcommand("train", "Train the fused concept/rule classifier");
    train->add_option("--data", to.data, "dataset manifest (file or directory)")->required();
    train->add_option("--out", to.out, "output directory");
    train->add_option("--embed-dim", to.embed_dim, "concept embedding width")->capture_default_str();
    train->add_option("--hidden-dim", to.hidden_dim, "indicator hidden width")->capture_default_str();
    train->add_option("--semantics", to.semantics, "rule layer form: literal|filtered|grounded")
        ->check(CLI::IsMember({"literal", "filtered", "grounded"}));
    train->add_option("--lambda1", to.lambda1, "concept-loss weight")->capture_default_str();
    train->add_option("--lambda2", to.lambda2, "rule-loss weight")->capture_default_str();
    train->add_option("--lr", to.lr, "Adam learning rate")->capture_default_str();
    train->add_option("--epochs", to.epochs, "training epochs")->capture_default_str();
    train->add_option("--concept-epochs", to.concept_epochs,
                      "leading epochs stepped on the concept loss alone")
        ->capture_default_str();
    train->add_option("--batch-size", to.batch_size, "minibatch size")->capture_default_str();
    train->add_option("--seed", to.seed, "seed for init and shuffling")->capture_default_str();
    train->add_flag("--no-concept-loss", to.no_concept_loss, "ablation: lambda1 = 0");
    train->add_flag("--no-neural-loss", to.no_neural_loss, "ablation: lambda2 = 0");

    EvalOpts eo;
    auto* eval = app.add_subcommand("eval", "Evaluate both heads and extract rules");
    eval->add_option("--data", eo.data, "dataset manifest (file or directory)")->required();
    eval->add_option("--model", eo.model_dir, "checkpoint directory")->required();
    eval->add_option("--out", eo.out, "output directory");
    eval->add_option("--semantics", eo.semantics, "override the rule layer form")
        ->check(CLI::IsMember({"literal", "filtered", "grounded"}));

    ExplainOpts xo;
    auto* explain = app.add_subcommand("explain", "Per-sample rules, concept scores "
                                                  "and optional saliency maps");
    explain->add_option("--data", xo.data, "dataset manifest (file or directory)")->required();
    explain->add_option("--model", xo.model_dir, "checkpoint directory")->required();
    explain->add_option("--out", xo.out, "output directory");
    explain->add_option("--sample", xo.samples, "restrict to these sample ids");
    explain->add_option("--concepts", xo.concepts, "concept set JSON for saliency");
    explain->add_option("--semantics", xo.semantics, "override the rule layer form")
        ->check(CLI::IsMember({"literal", "filtered", "grounded"}));
    explain->add_flag("--saliency", xo.saliency, "export per-concept heatmaps");

    StabilityOpts so;
    auto* stab = app.add_subcommand("stability", "Random input perturbation report");
    stab->add_option("--data", so.data, "dataset manifest (file or directory)")->required();
    stab->add_option("--model", so.model_dir, "checkpoint directory")->required();
    stab->add_option("--out", so.out, "output directory");
    stab->add_option("--epsilon", so.epsilon, "L-infinity perturbation radius")->capture_default_str();
    stab->add_option("--draws", so.draws, "perturbations per sample")->capture_default_str();
    stab->add_option("--seed", so.seed, "perturbation seed")->capture_default_str();
    stab->add_option("--semantics", so.semantics, "override the rule layer form")
        ->check(CLI::IsMember({"literal", "filtered", "grounded"}));

    WeightsOpts wo;
    auto* weights = app.add_subcommand("report-weights",
                                       "Fusion-head weight shares per concept and class");
    weights->add_option("--model", wo.model_dir, "checkpoint directory")->required();
    weights->add_option("--data", wo.data, "dataset manifest for concept names");
    weights->add_option("--out", wo.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*filter) return run_filter(fo);
        if (*label) return run_label(lo);
        if (*gen) return run_gen_synth(go);
        if (*train) return run_train(to);
        if (*eval) return run_eval(eo);
        if (*explain) return run_explain(xo);
        if (*stab) return run_stability(so);
        if (*weights) return run_report_weights(wo);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
