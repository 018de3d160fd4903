#include "micns/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "micns/errors.hpp"
#include "micns/tensor_io.hpp"

namespace micns::model {

namespace {

void check_config(const ModelConfig& cfg) {
    if (cfg.n_classes < 2) throw ValueError("model config needs at least 2 classes");
    if (cfg.n_concepts == 0 || cfg.feature_dim == 0 || cfg.embed_dim == 0 ||
        cfg.hidden_dim == 0)
        throw ValueError("model config needs positive n_concepts, feature_dim, embed_dim, "
                         "hidden_dim");
}

Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t({fan_in, fan_out});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-limit, limit);
    return t;
}

const Tensor& lookup(const ParamMap& params, const std::string& name,
                     std::vector<std::size_t> want) {
    auto it = params.find(name);
    if (it == params.end()) throw ValueError("missing parameter '" + name + "'");
    if (it->second.shape() != want)
        throw ShapeError("parameter '" + name + "' is " + it->second.shape_str() +
                         ", expected " + shape_to_string(want));
    return it->second;
}

void check_unit_interval(const Tensor& t, const char* what) {
    for (std::size_t i = 0; i < t.size(); ++i)
        if (!(t[i] >= 0.0 && t[i] <= 1.0))
            throw ValueError(std::string(what) + " outside [0,1]: " + std::to_string(t[i]));
}

double scalar_of(const Graph& g, ValueId id) { return g.value(id)[0]; }

/// Shortest decimal that round-trips; the same rendering JSON artifacts use.
std::string fmt_double(double v) { return nlohmann::json(v).dump(); }

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError(IoError::Code::open_failed,
                      "cannot open '" + path.string() + "' for writing");
    f << text;
    if (!f) throw IoError(IoError::Code::open_failed, "failed writing '" + path.string() + "'");
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f)
        throw IoError(IoError::Code::open_failed,
                      "cannot open '" + path.string() + "' for reading");
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(IoError::Code::parse_failed, path.string() + ": " + e.what());
    }
}

}  // namespace

std::size_t model_param_count(const ModelConfig& cfg) {
    check_config(cfg);
    std::size_t fusion_in = cfg.feature_dim + cfg.n_concepts * cfg.embed_dim;
    return encoder::encoder_param_count(cfg.encoder_config()) +
           nsym::indicator_param_count(cfg.indicator_config()) +
           fusion_in * cfg.n_classes + cfg.n_classes;
}

std::vector<std::string> model_param_names(const ModelConfig& cfg) {
    check_config(cfg);
    auto names = encoder::encoder_param_names(cfg.encoder_config());
    auto ind = nsym::indicator_param_names(cfg.indicator_config());
    names.insert(names.end(), ind.begin(), ind.end());
    names.push_back("fusion.w");
    names.push_back("fusion.b");
    return names;
}

void init_model_params(ParamMap& params, const ModelConfig& cfg, Rng& rng) {
    check_config(cfg);
    encoder::init_encoder_params(params, cfg.encoder_config(), rng);
    nsym::init_indicator_params(params, cfg.indicator_config(), rng);
    std::size_t fusion_in = cfg.feature_dim + cfg.n_concepts * cfg.embed_dim;
    params["fusion.w"] = glorot(fusion_in, cfg.n_classes, rng);
    params["fusion.b"] = Tensor({1, cfg.n_classes});
}

ForwardNodes build_forward(Graph& g, std::size_t batch, const ParamMap& params,
                           const ModelConfig& cfg) {
    check_config(cfg);
    if (batch == 0) throw ValueError("build_forward: batch must be positive");

    ForwardNodes out;
    out.features = g.input("features", {batch, cfg.feature_dim});
    out.enc = encoder::build_encoder(g, out.features, params, cfg.encoder_config());
    out.ind = nsym::build_indicators(g, out.enc.per_concept_mix, params,
                                     cfg.indicator_config());
    out.neural_scores =
        nsym::build_rule_scores(g, out.ind, cfg.semantics, out.enc.per_concept_prob);

    std::size_t fusion_in = cfg.feature_dim + cfg.n_concepts * cfg.embed_dim;
    ValueId w = g.param("fusion.w", lookup(params, "fusion.w", {fusion_in, cfg.n_classes}));
    ValueId b = g.param("fusion.b", lookup(params, "fusion.b", {1, cfg.n_classes}));
    out.logits = g.add(g.matmul(g.concat(out.features, out.enc.concept_features), w), b);
    return out;
}

LossNodes build_loss(Graph& g, const ForwardNodes& fwd,
                     const std::vector<std::size_t>& labels, const Tensor& concept_labels,
                     double lambda1, double lambda2) {
    if (lambda1 < 0.0 || lambda2 < 0.0) throw ValueError("loss weights must be >= 0");
    const auto& lshape = g.shape(fwd.logits);
    std::size_t batch = lshape[0], classes = lshape[1];
    const auto& cshape = g.shape(fwd.enc.concept_probs);
    if (labels.size() != batch)
        throw ShapeError("build_loss: " + std::to_string(labels.size()) + " labels for batch " +
                         std::to_string(batch));
    for (std::size_t y : labels)
        if (y >= classes) throw ValueError("build_loss: label " + std::to_string(y) +
                                           " out of range for " + std::to_string(classes) +
                                           " classes");
    if (concept_labels.rank() != 2 || concept_labels.shape() != cshape)
        throw ShapeError("build_loss: concept labels " + concept_labels.shape_str() +
                         " do not match concept probabilities " +
                         shape_to_string(cshape));

    LossNodes out;
    out.task = g.ce(fwd.logits, labels);
    out.concepts = g.bce(fwd.enc.concept_probs, g.constant(concept_labels));
    if (classes == 2) {
        Tensor onehot({batch, classes});
        for (std::size_t b = 0; b < batch; ++b) onehot.at(b, labels[b]) = 1.0;
        out.neural = g.bce(fwd.neural_scores, g.constant(onehot));
    } else {
        out.neural = g.nce(fwd.neural_scores, labels);
    }
    out.total = g.add(out.task, g.add(g.scale(out.concepts, lambda1),
                                      g.scale(out.neural, lambda2)));
    return out;
}

ForwardResult forward_full(const Tensor& features, const ParamMap& params,
                           const ModelConfig& cfg) {
    if (features.rank() != 2 || features.cols() != cfg.feature_dim)
        throw ShapeError("forward_full: features must be Mx" +
                         std::to_string(cfg.feature_dim) + ", got " + features.shape_str());
    std::size_t m = features.rows();

    Graph g;
    ForwardNodes fwd = build_forward(g, m, params, cfg);
    g.bind("features", features);

    ForwardResult out;
    out.neural_scores = g.forward(fwd.neural_scores);
    check_unit_interval(out.neural_scores, "rule-layer truth degree");
    out.logits = g.forward(fwd.logits);
    out.concept_probs = g.forward(fwd.enc.concept_probs);
    out.concept_features = g.forward(fwd.enc.concept_features);

    // The per-class indicator matrices are side outputs, not ancestors of the
    // heads forwarded above, so they need their own evaluation passes.
    std::vector<Tensor> pol(cfg.n_classes), rel(cfg.n_classes);
    for (std::size_t j = 0; j < cfg.n_classes; ++j) {
        pol[j] = g.forward(fwd.ind.polarity[j]);
        rel[j] = g.forward(fwd.ind.relevance[j]);
    }

    out.indicators.reserve(m);
    for (std::size_t b = 0; b < m; ++b) {
        nsym::IndicatorMatrix im{Tensor({cfg.n_concepts, cfg.n_classes}),
                                 Tensor({cfg.n_concepts, cfg.n_classes})};
        for (std::size_t j = 0; j < cfg.n_classes; ++j) {
            for (std::size_t i = 0; i < cfg.n_concepts; ++i) {
                im.polarity.at(i, j) = pol[j].at(b, i);
                im.relevance.at(i, j) = rel[j].at(b, i);
            }
        }
        out.indicators.push_back(std::move(im));
    }
    return out;
}

LossBreakdown total_loss(const Tensor& features, const std::vector<std::size_t>& labels,
                         const Tensor& concept_labels, const ParamMap& params,
                         const ModelConfig& cfg, double lambda1, double lambda2) {
    if (features.rank() != 2)
        throw ShapeError("total_loss: features must be MxF, got " + features.shape_str());
    Graph g;
    ForwardNodes fwd = build_forward(g, features.rows(), params, cfg);
    LossNodes loss = build_loss(g, fwd, labels, concept_labels, lambda1, lambda2);
    g.bind("features", features);

    LossBreakdown out;
    out.total = g.forward(loss.total)[0];
    check_unit_interval(g.value(fwd.neural_scores), "rule-layer truth degree");
    out.task_loss = scalar_of(g, loss.task);
    out.concept_loss = scalar_of(g, loss.concepts);
    out.neural_loss = scalar_of(g, loss.neural);
    return out;
}

TrainResult train(const data::Dataset& dataset, const ModelConfig& cfg,
                  const Hyperparams& hyper) {
    check_config(cfg);
    std::size_t m = dataset.size();
    if (m == 0) throw ValueError("train: empty dataset");
    if (dataset.features.rank() != 2 || dataset.features.rows() != m ||
        dataset.features.cols() != cfg.feature_dim)
        throw ShapeError("train: features " + dataset.features.shape_str() +
                         " do not match " + std::to_string(m) + " samples x " +
                         std::to_string(cfg.feature_dim));
    if (dataset.concept_labels.empty())
        throw ValueError("train: dataset has no concept labels");
    if (dataset.concept_labels.rows() != m ||
        dataset.concept_labels.cols() != cfg.n_concepts)
        throw ShapeError("train: concept labels " + dataset.concept_labels.shape_str() +
                         " do not match " + std::to_string(m) + " samples x " +
                         std::to_string(cfg.n_concepts) + " concepts");
    for (std::size_t y : dataset.labels)
        if (y >= cfg.n_classes)
            throw ValueError("train: label " + std::to_string(y) + " out of range");
    if (hyper.batch_size == 0) throw ValueError("train: batch size must be positive");
    if (!(hyper.learning_rate > 0.0)) throw ValueError("train: learning rate must be > 0");
    if (hyper.concept_epochs > hyper.epochs)
        throw ValueError("train: concept_epochs " + std::to_string(hyper.concept_epochs) +
                         " exceeds epochs " + std::to_string(hyper.epochs));

    TrainResult out;
    out.config = cfg;
    out.hyper = hyper;
    Rng rng(hyper.seed);
    init_model_params(out.params, cfg, rng);
    out.adam = AdamState(AdamConfig{hyper.learning_rate, 0.9, 0.999, 1e-8});

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
        rng.shuffle(order);
        double task_sum = 0.0, concept_sum = 0.0, neural_sum = 0.0;

        for (std::size_t start = 0, batch_no = 0; start < m;
             start += hyper.batch_size, ++batch_no) {
            std::size_t b = std::min(hyper.batch_size, m - start);

            Tensor feats({b, cfg.feature_dim});
            Tensor cbits({b, cfg.n_concepts});
            std::vector<std::size_t> labels(b);
            for (std::size_t k = 0; k < b; ++k) {
                std::size_t src = order[start + k];
                for (std::size_t c = 0; c < cfg.feature_dim; ++c)
                    feats.at(k, c) = dataset.features.at(src, c);
                for (std::size_t c = 0; c < cfg.n_concepts; ++c)
                    cbits.at(k, c) = dataset.concept_labels.at(src, c);
                labels[k] = dataset.labels[src];
            }

            Graph g;
            ForwardNodes fwd = build_forward(g, b, out.params, cfg);
            LossNodes loss = build_loss(g, fwd, labels, cbits, hyper.lambda1, hyper.lambda2);
            g.bind("features", feats);

            double total = g.forward(loss.total)[0];
            if (!std::isfinite(total))
                throw ValueError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(batch_no) +
                                 " (task=" + std::to_string(scalar_of(g, loss.task)) +
                                 ", concepts=" + std::to_string(scalar_of(g, loss.concepts)) +
                                 ", neural=" + std::to_string(scalar_of(g, loss.neural)) + ")");
            check_unit_interval(g.value(fwd.neural_scores), "rule-layer truth degree");

            // Alignment stage: step on the raw concept loss before the joint
            // objective, so concept scores settle on their labels first.
            ValueId root = epoch <= hyper.concept_epochs ? loss.concepts : loss.total;
            if (root.idx != loss.total.idx) g.forward(root);
            g.backward(root);
            auto grads = g.param_gradients();
            adam_step(out.params, grads, out.adam);

            double bd = static_cast<double>(b);
            task_sum += scalar_of(g, loss.task) * bd;
            concept_sum += scalar_of(g, loss.concepts) * bd;
            neural_sum += scalar_of(g, loss.neural) * bd;
        }

        LossBreakdown mean;
        mean.task_loss = task_sum / static_cast<double>(m);
        mean.concept_loss = concept_sum / static_cast<double>(m);
        mean.neural_loss = neural_sum / static_cast<double>(m);
        mean.total = mean.task_loss +
                     (hyper.lambda1 * mean.concept_loss + hyper.lambda2 * mean.neural_loss);
        out.curve.push_back({epoch, mean});
    }
    return out;
}

void write_loss_curve_csv(const std::filesystem::path& path,
                          const std::vector<EpochStats>& curve) {
    std::string text = "epoch,task_loss,concept_loss,neural_loss,total_loss\n";
    for (const auto& e : curve) {
        text += std::to_string(e.epoch) + "," + fmt_double(e.losses.task_loss) + "," +
                fmt_double(e.losses.concept_loss) + "," + fmt_double(e.losses.neural_loss) +
                "," + fmt_double(e.losses.total) + "\n";
    }
    write_text_file(path, text);
}

std::vector<EpochStats> read_loss_curve_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f)
        throw IoError(IoError::Code::open_failed,
                      "cannot open '" + path.string() + "' for reading");
    std::string line;
    if (!std::getline(f, line) || line != "epoch,task_loss,concept_loss,neural_loss,total_loss")
        throw IoError(IoError::Code::bad_header, path.string() + ": unexpected header");

    std::vector<EpochStats> curve;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 5)
            throw IoError(IoError::Code::parse_failed,
                          path.string() + ": expected 5 columns, got " +
                              std::to_string(cells.size()));
        EpochStats e;
        try {
            e.epoch = std::stoul(cells[0]);
            e.losses.task_loss = std::stod(cells[1]);
            e.losses.concept_loss = std::stod(cells[2]);
            e.losses.neural_loss = std::stod(cells[3]);
            e.losses.total = std::stod(cells[4]);
        } catch (const std::exception& ex) {
            throw IoError(IoError::Code::parse_failed, path.string() + ": " + ex.what());
        }
        curve.push_back(e);
    }
    return curve;
}

Evaluation evaluate(const data::Dataset& dataset, const ParamMap& params,
                    const ModelConfig& cfg) {
    check_config(cfg);
    std::size_t m = dataset.size();
    if (m == 0) throw ValueError("evaluate: empty dataset");
    for (std::size_t y : dataset.labels)
        if (y >= cfg.n_classes)
            throw ValueError("evaluate: label " + std::to_string(y) + " out of range");

    Evaluation ev;
    ev.outputs = forward_full(dataset.features, params, cfg);
    ev.fused_predictions = argmax_rows(ev.outputs.logits);
    ev.neural_predictions = argmax_rows(ev.outputs.neural_scores);
    ev.fused = metrics::multiclass_metrics(ev.fused_predictions, dataset.labels,
                                           cfg.n_classes,
                                           tensor_rows(softmax_rows(ev.outputs.logits)));
    ev.neural = metrics::multiclass_metrics(ev.neural_predictions, dataset.labels,
                                            cfg.n_classes,
                                            tensor_rows(ev.outputs.neural_scores));

    ev.explanations.reserve(m);
    for (std::size_t b = 0; b < m; ++b) {
        nsym::SampleExplanation ex;
        ex.predicted_class = ev.neural_predictions[b];
        ex.rule = nsym::extract_local_rule(ev.outputs.indicators[b], ex.predicted_class);
        ex.concept_bits.resize(cfg.n_concepts);
        for (std::size_t i = 0; i < cfg.n_concepts; ++i)
            ex.concept_bits[i] =
                fuzzy::booleanize(ev.outputs.concept_probs.at(b, i)) ? 1 : 0;
        ex.neural_score = ev.outputs.neural_scores.at(b, ex.predicted_class);
        ev.explanations.push_back(std::move(ex));
    }
    ev.rules = nsym::aggregate_global_rules(ev.explanations, cfg.n_classes);
    return ev;
}

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt) {
    check_config(ckpt.config);
    namespace fs = std::filesystem;
    fs::create_directories(dir / "params");
    fs::create_directories(dir / "adam_m");
    fs::create_directories(dir / "adam_v");

    nlohmann::json j;
    j["format_version"] = 1;
    j["model"] = {{"n_classes", ckpt.config.n_classes},
                  {"n_concepts", ckpt.config.n_concepts},
                  {"feature_dim", ckpt.config.feature_dim},
                  {"embed_dim", ckpt.config.embed_dim},
                  {"hidden_dim", ckpt.config.hidden_dim},
                  {"semantics", nsym::rule_semantics_name(ckpt.config.semantics)}};
    j["hyper"] = {{"lambda1", ckpt.hyper.lambda1},
                  {"lambda2", ckpt.hyper.lambda2},
                  {"learning_rate", ckpt.hyper.learning_rate},
                  {"epochs", ckpt.hyper.epochs},
                  {"concept_epochs", ckpt.hyper.concept_epochs},
                  {"batch_size", ckpt.hyper.batch_size},
                  {"seed", ckpt.hyper.seed}};
    j["epochs_completed"] = ckpt.epochs_completed;
    j["adam"] = {{"step", ckpt.adam.step_count()},
                 {"lr", ckpt.adam.config().lr},
                 {"beta1", ckpt.adam.config().beta1},
                 {"beta2", ckpt.adam.config().beta2},
                 {"epsilon", ckpt.adam.config().epsilon}};

    std::vector<std::string> names;
    for (const auto& [name, tensor] : ckpt.params) {
        names.push_back(name);
        save_tensor(dir / "params" / (name + ".micn"), tensor);
    }
    j["parameters"] = names;

    std::vector<std::string> moment_names;
    for (const auto& [name, tensor] : ckpt.adam.first_moments()) {
        moment_names.push_back(name);
        save_tensor(dir / "adam_m" / (name + ".micn"), tensor);
        save_tensor(dir / "adam_v" / (name + ".micn"),
                    ckpt.adam.second_moments().at(name));
    }
    j["adam"]["moments"] = moment_names;

    write_text_file(dir / "checkpoint.json", j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
    nlohmann::json j = read_json_file(dir / "checkpoint.json");
    if (!j.contains("format_version") || j["format_version"].get<int>() != 1)
        throw IoError(IoError::Code::bad_version,
                      (dir / "checkpoint.json").string() + ": unsupported format version");

    Checkpoint ckpt;
    const auto& jm = j.at("model");
    ckpt.config.n_classes = jm.at("n_classes").get<std::size_t>();
    ckpt.config.n_concepts = jm.at("n_concepts").get<std::size_t>();
    ckpt.config.feature_dim = jm.at("feature_dim").get<std::size_t>();
    ckpt.config.embed_dim = jm.at("embed_dim").get<std::size_t>();
    ckpt.config.hidden_dim = jm.at("hidden_dim").get<std::size_t>();
    ckpt.config.semantics =
        nsym::rule_semantics_from_string(jm.at("semantics").get<std::string>());

    const auto& jh = j.at("hyper");
    ckpt.hyper.lambda1 = jh.at("lambda1").get<double>();
    ckpt.hyper.lambda2 = jh.at("lambda2").get<double>();
    ckpt.hyper.learning_rate = jh.at("learning_rate").get<double>();
    ckpt.hyper.epochs = jh.at("epochs").get<std::size_t>();
    ckpt.hyper.concept_epochs = jh.at("concept_epochs").get<std::size_t>();
    ckpt.hyper.batch_size = jh.at("batch_size").get<std::size_t>();
    ckpt.hyper.seed = jh.at("seed").get<std::uint64_t>();
    ckpt.epochs_completed = j.at("epochs_completed").get<std::size_t>();

    auto expected = model_param_names(ckpt.config);
    std::vector<std::string> listed = j.at("parameters").get<std::vector<std::string>>();
    std::vector<std::string> sorted_expected = expected;
    std::sort(sorted_expected.begin(), sorted_expected.end());
    if (listed != sorted_expected)
        throw IoError(IoError::Code::bad_header,
                      (dir / "checkpoint.json").string() +
                          ": parameter list does not match the declared architecture");
    for (const auto& name : listed)
        ckpt.params[name] = load_tensor(dir / "params" / (name + ".micn"));

    const auto& ja = j.at("adam");
    AdamConfig acfg{ja.at("lr").get<double>(), ja.at("beta1").get<double>(),
                    ja.at("beta2").get<double>(), ja.at("epsilon").get<double>()};
    ckpt.adam = AdamState(acfg);
    ParamMap first, second;
    for (const auto& name : ja.at("moments").get<std::vector<std::string>>()) {
        first[name] = load_tensor(dir / "adam_m" / (name + ".micn"));
        second[name] = load_tensor(dir / "adam_v" / (name + ".micn"));
    }
    ckpt.adam.restore(ja.at("step").get<std::size_t>(), std::move(first), std::move(second));
    return ckpt;
}

std::vector<std::size_t> argmax_rows(const Tensor& m) {
    if (m.rank() != 2 || m.cols() == 0)
        throw ShapeError("argmax_rows: need a non-empty matrix, got " + m.shape_str());
    std::vector<std::size_t> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < m.cols(); ++c)
            if (m.at(r, c) > m.at(r, best)) best = c;
        out[r] = best;
    }
    return out;
}

Tensor softmax_rows(const Tensor& logits) {
    if (logits.rank() != 2)
        throw ShapeError("softmax_rows: need a matrix, got " + logits.shape_str());
    Tensor out({logits.rows(), logits.cols()});
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        double mx = logits.at(r, 0);
        for (std::size_t c = 1; c < logits.cols(); ++c) mx = std::max(mx, logits.at(r, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < logits.cols(); ++c) {
            out.at(r, c) = std::exp(logits.at(r, c) - mx);
            sum += out.at(r, c);
        }
        for (std::size_t c = 0; c < logits.cols(); ++c) out.at(r, c) /= sum;
    }
    return out;
}

std::vector<std::vector<double>> tensor_rows(const Tensor& m) {
    if (m.rank() != 2) throw ShapeError("tensor_rows: need a matrix, got " + m.shape_str());
    std::vector<std::vector<double>> out(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m.at(r, c);
    return out;
}

}  // namespace micns::model
