#include "micns/alignment.hpp"

#include <cmath>
#include <fstream>

#include "micns/errors.hpp"
#include "micns/tensor_io.hpp"

namespace micns::alignment {

namespace {

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

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError(IoError::Code::open_failed,
                      "cannot open '" + path.string() + "' for writing");
    f << text;
    if (!f) throw IoError(IoError::Code::open_failed, "failed writing '" + path.string() + "'");
}

}  // namespace

ConceptSet load_concept_set(const std::filesystem::path& json_path) {
    nlohmann::json j = read_json_file(json_path);
    auto dir = json_path.parent_path();

    ConceptSet set;
    if (!j.contains("concepts") || !j["concepts"].is_array())
        throw IoError(IoError::Code::parse_failed,
                      json_path.string() + ": missing 'concepts' array");
    for (const auto& name : j["concepts"]) {
        if (!name.is_string())
            throw IoError(IoError::Code::parse_failed,
                          json_path.string() + ": concept names must be strings");
        set.names.push_back(name.get<std::string>());
    }

    if (j.contains("embeddings") && !j["embeddings"].is_null()) {
        set.embeddings = load_tensor(dir / j["embeddings"].get<std::string>());
        if (set.embeddings.rank() != 2 || set.embeddings.rows() != set.names.size())
            throw IoError(IoError::Code::bad_header,
                          json_path.string() + ": embeddings tensor is " +
                              set.embeddings.shape_str() + " for " +
                              std::to_string(set.names.size()) + " concepts");
    }
    if (j.contains("classes") && !j["classes"].is_null()) {
        const auto& cj = j["classes"];
        for (const auto& name : cj.value("names", nlohmann::json::array()))
            set.class_names.push_back(name.get<std::string>());
        if (cj.contains("embeddings") && !cj["embeddings"].is_null()) {
            set.class_embeddings = load_tensor(dir / cj["embeddings"].get<std::string>());
            if (set.class_embeddings.rank() != 2 ||
                set.class_embeddings.rows() != set.class_names.size())
                throw IoError(IoError::Code::bad_header,
                              json_path.string() + ": class embeddings tensor is " +
                                  set.class_embeddings.shape_str() + " for " +
                                  std::to_string(set.class_names.size()) + " classes");
        }
    }
    return set;
}

void save_concept_set(const std::filesystem::path& json_path, const ConceptSet& set) {
    auto dir = json_path.parent_path();
    nlohmann::json j;
    j["format_version"] = 1;
    j["concepts"] = set.names;
    if (set.has_embeddings()) {
        std::string rel = json_path.stem().string() + "_embeddings.micn";
        save_tensor(dir / rel, set.embeddings);
        j["embeddings"] = rel;
        j["embedding_dim"] = set.embeddings.cols();
    } else {
        j["embeddings"] = nullptr;
        j["embedding_dim"] = nullptr;
    }
    if (!set.class_names.empty()) {
        nlohmann::json cj;
        cj["names"] = set.class_names;
        if (!set.class_embeddings.empty()) {
            std::string rel = json_path.stem().string() + "_class_embeddings.micn";
            save_tensor(dir / rel, set.class_embeddings);
            cj["embeddings"] = rel;
        } else {
            cj["embeddings"] = nullptr;
        }
        j["classes"] = cj;
    } else {
        j["classes"] = nullptr;
    }
    write_text_file(json_path, j.dump(2) + "\n");
}

double cosine(const double* a, const double* b, std::size_t n) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

Tensor compute_heatmap(const Tensor& feature_map, const Tensor& text_embedding) {
    if (feature_map.rank() != 3)
        throw ShapeError("compute_heatmap: feature map must be HxWxD, got " +
                         feature_map.shape_str());
    if (text_embedding.rank() != 1)
        throw ShapeError("compute_heatmap: text embedding must be rank-1, got " +
                         text_embedding.shape_str());
    std::size_t h = feature_map.dim(0), w = feature_map.dim(1), d = feature_map.dim(2);
    if (text_embedding.size() != d)
        throw ShapeError("compute_heatmap: embedding dim " +
                         std::to_string(text_embedding.size()) +
                         " does not match feature depth " + std::to_string(d));

    Tensor out({h, w});
    const double* t = text_embedding.data().data();
    for (std::size_t p = 0; p < h; ++p)
        for (std::size_t k = 0; k < w; ++k) {
            const double* v = feature_map.data().data() + (p * w + k) * d;
            out.at(p, k) = cosine(t, v, d);
        }
    return out;
}

double pool_scores(const Tensor& heatmap) {
    if (heatmap.empty()) throw ShapeError("pool_scores: empty heatmap");
    double acc = 0.0;
    for (double v : heatmap.data()) acc += v;
    return acc / static_cast<double>(heatmap.size());
}

Tensor concept_scores(const std::vector<Tensor>& feature_maps, const Tensor& embeddings) {
    if (feature_maps.empty()) throw ShapeError("concept_scores: no feature maps");
    if (embeddings.rank() != 2)
        throw ShapeError("concept_scores: embeddings must be NxD, got " +
                         embeddings.shape_str());
    std::size_t n = embeddings.rows(), d = embeddings.cols();

    Tensor out({feature_maps.size(), n});
    for (std::size_t m = 0; m < feature_maps.size(); ++m) {
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> emb(embeddings.data().begin() + static_cast<std::ptrdiff_t>(i * d),
                                    embeddings.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
            out.at(m, i) = pool_scores(compute_heatmap(feature_maps[m], Tensor::vec(emb)));
        }
    }
    return out;
}

Tensor threshold_labels(const Tensor& scores, double tau) {
    if (scores.rank() != 2)
        throw ShapeError("threshold_labels: scores must be MxN, got " + scores.shape_str());
    Tensor out({scores.rows(), scores.cols()});
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= tau ? 1.0 : 0.0;
    return out;
}

std::vector<std::size_t> prune_low_similarity(const Tensor& scores, double floor) {
    if (scores.rank() != 2)
        throw ShapeError("prune_low_similarity: scores must be MxN, got " + scores.shape_str());
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < scores.cols(); ++i) {
        double best = scores.at(0, i);
        for (std::size_t m = 1; m < scores.rows(); ++m) best = std::max(best, scores.at(m, i));
        if (best >= floor) kept.push_back(i);
    }
    return kept;
}

FilterResult filter_concepts(const ConceptSet& pool, const Tensor& scores,
                             const FilterConfig& config) {
    std::size_t n = pool.size();
    bool need_embeddings = config.class_similarity_filter || config.pairwise_filter;
    if (need_embeddings && !pool.has_embeddings())
        throw ValueError("filter_concepts: similarity filters need concept embeddings");
    if (config.class_similarity_filter && pool.class_embeddings.empty())
        throw ValueError("filter_concepts: class-similarity filter needs class embeddings");
    if (config.projection_filter) {
        if (scores.empty())
            throw ValueError("filter_concepts: projection filter needs a score matrix");
        if (scores.rank() != 2 || scores.cols() != n)
            throw ShapeError("filter_concepts: score matrix " + scores.shape_str() +
                             " does not cover " + std::to_string(n) + " concepts");
    }
    std::size_t d = pool.has_embeddings() ? pool.embeddings.cols() : 0;
    if (config.class_similarity_filter && pool.class_embeddings.cols() != d)
        throw ShapeError("filter_concepts: class embedding dim " +
                         std::to_string(pool.class_embeddings.cols()) +
                         " does not match concept embedding dim " + std::to_string(d));

    FilterResult result;
    result.decisions.resize(n);
    std::vector<char> alive(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        result.decisions[i].index = i;
        result.decisions[i].name = pool.names[i];
    }

    auto drop = [&](std::size_t i, const char* stage, double trigger) {
        alive[i] = 0;
        result.decisions[i].kept = false;
        result.decisions[i].stage = stage;
        result.decisions[i].trigger = trigger;
    };

    if (config.length_filter) {
        for (std::size_t i = 0; i < n; ++i)
            if (pool.names[i].size() > config.max_name_length)
                drop(i, "length", static_cast<double>(pool.names[i].size()));
    }

    if (config.class_similarity_filter) {
        std::size_t k = pool.class_embeddings.rows();
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            const double* ei = pool.embeddings.data().data() + i * d;
            for (std::size_t c = 0; c < k; ++c) {
                double sim = cosine(ei, pool.class_embeddings.data().data() + c * d, d);
                if (sim >= config.class_similarity_threshold) {
                    drop(i, "class-similarity", sim);
                    break;
                }
            }
        }
    }

    if (config.pairwise_filter) {
        // Greedy in listing order: of a too-similar pair, the later one goes.
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            const double* ei = pool.embeddings.data().data() + i * d;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!alive[j]) continue;
                double sim = cosine(ei, pool.embeddings.data().data() + j * d, d);
                if (sim >= config.pairwise_threshold) drop(j, "pairwise", sim);
            }
        }
    }

    if (config.projection_filter) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            double best = scores.at(0, i);
            for (std::size_t m = 1; m < scores.rows(); ++m)
                best = std::max(best, scores.at(m, i));
            if (!(best >= config.projection_floor)) drop(i, "projection", best);
        }
    }

    for (std::size_t i = 0; i < n; ++i)
        if (alive[i]) result.retained_indices.push_back(i);

    result.retained.class_names = pool.class_names;
    result.retained.class_embeddings = pool.class_embeddings;
    for (std::size_t i : result.retained_indices) result.retained.names.push_back(pool.names[i]);
    if (pool.has_embeddings() && !result.retained_indices.empty()) {
        Tensor emb({result.retained_indices.size(), d});
        for (std::size_t r = 0; r < result.retained_indices.size(); ++r)
            for (std::size_t c = 0; c < d; ++c)
                emb.at(r, c) = pool.embeddings.at(result.retained_indices[r], c);
        result.retained.embeddings = std::move(emb);
    }
    return result;
}

nlohmann::json filter_provenance_json(const FilterResult& result, const FilterConfig& config) {
    nlohmann::json decisions = nlohmann::json::array();
    for (const auto& dcs : result.decisions) {
        nlohmann::json e{{"index", dcs.index}, {"name", dcs.name}, {"kept", dcs.kept}};
        if (!dcs.kept) {
            e["stage"] = dcs.stage;
            e["trigger"] = dcs.trigger;
        }
        decisions.push_back(e);
    }
    return {{"config",
             {{"length_filter", config.length_filter},
              {"max_name_length", config.max_name_length},
              {"class_similarity_filter", config.class_similarity_filter},
              {"class_similarity_threshold", config.class_similarity_threshold},
              {"pairwise_filter", config.pairwise_filter},
              {"pairwise_threshold", config.pairwise_threshold},
              {"projection_filter", config.projection_filter},
              {"projection_floor", config.projection_floor}}},
            {"input_count", result.decisions.size()},
            {"retained_count", result.retained_indices.size()},
            {"retained_indices", result.retained_indices},
            {"decisions", decisions}};
}

}  // namespace micns::alignment
