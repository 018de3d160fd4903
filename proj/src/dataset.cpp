#include "micns/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "micns/errors.hpp"
#include "micns/rng.hpp"
#include "micns/tensor_io.hpp"

namespace micns::data {

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

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line, const std::string& origin,
                                        std::size_t lineno) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted)
        throw IoError(IoError::Code::parse_failed,
                      origin + ":" + std::to_string(lineno) + ": unterminated quote");
    fields.push_back(cur);
    return fields;
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
    nlohmann::json j = read_json_file(path);

    DatasetManifest m;
    m.base_dir = path.parent_path();
    try {
        if (j.value("format_version", 1) != 1)
            throw IoError(IoError::Code::bad_version,
                          path.string() + ": unsupported manifest version");
        m.feature_dim = j.at("feature_dim").get<std::size_t>();
        m.n_classes = j.at("num_classes").get<std::size_t>();
        if (j.contains("concept_labels") && !j["concept_labels"].is_null())
            m.concept_labels_csv = j["concept_labels"].get<std::string>();
        if (j.contains("concept_set") && !j["concept_set"].is_null())
            m.concept_set = j["concept_set"].get<std::string>();
        for (const auto& s : j.at("samples")) {
            SampleEntry e;
            e.id = s.at("id").get<std::string>();
            e.features = s.at("features").get<std::string>();
            e.label = s.at("label").get<std::size_t>();
            if (s.contains("feature_map") && !s["feature_map"].is_null())
                e.feature_map = s["feature_map"].get<std::string>();
            m.samples.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(IoError::Code::parse_failed, path.string() + ": " + e.what());
    }

    if (m.feature_dim == 0)
        throw ValueError(path.string() + ": feature_dim must be positive");
    if (m.n_classes < 2) throw ValueError(path.string() + ": num_classes must be at least 2");
    std::set<std::string> seen;
    for (const auto& s : m.samples) {
        if (s.id.empty()) throw ValueError(path.string() + ": empty sample id");
        if (!seen.insert(s.id).second)
            throw ValueError(path.string() + ": duplicate sample id '" + s.id + "'");
        if (s.label >= m.n_classes)
            throw ValueError(path.string() + ": sample '" + s.id + "' has label " +
                             std::to_string(s.label) + " but num_classes is " +
                             std::to_string(m.n_classes));
    }
    return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : manifest.samples) {
        nlohmann::json e{{"id", s.id}, {"features", s.features}, {"label", s.label}};
        if (!s.feature_map.empty()) e["feature_map"] = s.feature_map;
        samples.push_back(e);
    }
    nlohmann::json j{{"format_version", 1},
                     {"feature_dim", manifest.feature_dim},
                     {"num_classes", manifest.n_classes},
                     {"samples", samples}};
    if (!manifest.concept_labels_csv.empty()) j["concept_labels"] = manifest.concept_labels_csv;
    if (!manifest.concept_set.empty()) j["concept_set"] = manifest.concept_set;
    write_text_file(path, j.dump(2) + "\n");
}

Dataset load_dataset(const DatasetManifest& manifest, bool with_feature_maps) {
    if (manifest.samples.empty()) throw ValueError("load_dataset: manifest lists no samples");

    Dataset d;
    d.n_classes = manifest.n_classes;
    d.features = Tensor({manifest.samples.size(), manifest.feature_dim});

    for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
        const SampleEntry& s = manifest.samples[i];
        Tensor f = load_tensor(manifest.base_dir / s.features);
        bool row_shaped = f.rank() == 1 || (f.rank() == 2 && f.rows() == 1);
        if (!row_shaped || f.size() != manifest.feature_dim)
            throw ShapeError("sample '" + s.id + "': feature tensor is " + f.shape_str() +
                             ", expected length " + std::to_string(manifest.feature_dim));
        for (std::size_t c = 0; c < manifest.feature_dim; ++c) d.features.at(i, c) = f[c];
        d.labels.push_back(s.label);
        d.ids.push_back(s.id);

        if (with_feature_maps) {
            if (s.feature_map.empty())
                throw ValueError("sample '" + s.id + "' has no feature map path");
            Tensor map = load_tensor(manifest.base_dir / s.feature_map);
            if (map.rank() != 3)
                throw ShapeError("sample '" + s.id + "': feature map is " + map.shape_str() +
                                 ", expected rank 3");
            d.feature_maps.push_back(std::move(map));
        }
    }

    if (!manifest.concept_labels_csv.empty()) {
        ConceptCsv csv = read_concept_csv(manifest.base_dir / manifest.concept_labels_csv);
        if (csv.ids.size() != manifest.samples.size())
            throw ValueError("concept CSV lists " + std::to_string(csv.ids.size()) +
                             " rows for " + std::to_string(manifest.samples.size()) +
                             " samples");
        for (std::size_t i = 0; i < csv.ids.size(); ++i)
            if (csv.ids[i] != manifest.samples[i].id)
                throw ValueError("concept CSV row " + std::to_string(i + 1) + " is '" +
                                 csv.ids[i] + "' but the manifest lists '" +
                                 manifest.samples[i].id + "'");
        d.concept_labels = std::move(csv.bits);
        d.concept_names = std::move(csv.names);
    }
    return d;
}

void write_concept_csv(const std::filesystem::path& path, const ConceptCsv& csv) {
    if (csv.bits.rank() != 2 || csv.bits.rows() != csv.ids.size() ||
        csv.bits.cols() != csv.names.size())
        throw ShapeError("write_concept_csv: bits tensor " + csv.bits.shape_str() +
                         " does not match " + std::to_string(csv.ids.size()) + " ids x " +
                         std::to_string(csv.names.size()) + " names");

    std::ostringstream os;
    os << "id";
    for (const auto& name : csv.names) os << "," << csv_escape(name);
    os << "\n";
    for (std::size_t i = 0; i < csv.ids.size(); ++i) {
        os << csv_escape(csv.ids[i]);
        for (std::size_t c = 0; c < csv.names.size(); ++c) {
            double v = csv.bits.at(i, c);
            if (v != 0.0 && v != 1.0)
                throw ValueError("write_concept_csv: cell (" + std::to_string(i) + "," +
                                 std::to_string(c) + ") is " + std::to_string(v) +
                                 ", labels must be 0 or 1");
            os << "," << (v == 1.0 ? "1" : "0");
        }
        os << "\n";
    }
    write_text_file(path, os.str());
}

ConceptCsv read_concept_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError(IoError::Code::open_failed,
                      "cannot open '" + path.string() + "' for reading");

    std::string origin = path.string();
    std::string line;
    std::size_t lineno = 0;
    ConceptCsv csv;
    std::vector<double> cells;

    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line, origin, lineno);
        if (lineno == 1) {
            if (fields.size() < 2 || fields[0] != "id")
                throw IoError(IoError::Code::parse_failed,
                              origin + ": header must start with 'id' and list concepts");
            csv.names.assign(fields.begin() + 1, fields.end());
            continue;
        }
        if (fields.size() != csv.names.size() + 1)
            throw IoError(IoError::Code::parse_failed,
                          origin + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(csv.names.size() + 1) + " fields, got " +
                              std::to_string(fields.size()));
        csv.ids.push_back(fields[0]);
        for (std::size_t c = 1; c < fields.size(); ++c) {
            if (fields[c] == "0") cells.push_back(0.0);
            else if (fields[c] == "1") cells.push_back(1.0);
            else
                throw IoError(IoError::Code::parse_failed,
                              origin + ":" + std::to_string(lineno) + ": cell '" + fields[c] +
                                  "' is not 0 or 1");
        }
    }
    if (csv.names.empty())
        throw IoError(IoError::Code::parse_failed, origin + ": missing header row");
    if (csv.ids.empty())
        throw IoError(IoError::Code::parse_failed, origin + ": no data rows");
    csv.bits = Tensor({csv.ids.size(), csv.names.size()}, std::move(cells));
    return csv;
}

std::vector<fuzzy::ConjunctiveRule> default_planted_rules() {
    return {
        fuzzy::ConjunctiveRule{0, {{0, false}, {1, true}, {2, false}, {3, true}}, 0},
        fuzzy::ConjunctiveRule{1, {{0, true}, {1, false}, {2, true}, {3, false}}, 0}};
}

namespace {

bool satisfies(const fuzzy::ConjunctiveRule& rule, std::uint32_t assignment) {
    for (const auto& lit : rule.literals) {
        bool bit = (assignment >> lit.concept_index) & 1u;
        if (bit != lit.positive) return false;
    }
    return true;
}

}  // namespace

std::vector<std::vector<std::uint32_t>> planted_pools(
    const std::vector<fuzzy::ConjunctiveRule>& rules, std::size_t n_concepts,
    std::size_t n_classes) {
    if (n_concepts == 0 || n_concepts > 16)
        throw ValueError("planted rules: concept count must be 1..16");
    if (rules.size() != n_classes)
        throw ValueError("planted rules: need exactly one rule per class, got " +
                         std::to_string(rules.size()) + " for " + std::to_string(n_classes) +
                         " classes");
    std::vector<char> seen_class(n_classes, 0);
    for (const auto& r : rules) {
        if (r.class_index >= n_classes)
            throw ValueError("planted rules: class index " + std::to_string(r.class_index) +
                             " out of range");
        if (seen_class[r.class_index])
            throw ValueError("planted rules: two rules for class " +
                             std::to_string(r.class_index));
        seen_class[r.class_index] = 1;
        for (const auto& lit : r.normalized().literals)
            if (lit.concept_index >= n_concepts)
                throw ValueError("planted rules: literal references concept " +
                                 std::to_string(lit.concept_index) + " of " +
                                 std::to_string(n_concepts));
    }

    // Assignments satisfying several rules belong to no pool, so every drawn
    // sample carries an unambiguous label.
    std::vector<std::vector<std::uint32_t>> pools(n_classes);
    for (std::uint32_t a = 0; a < (1u << n_concepts); ++a) {
        std::size_t hits = 0, owner = 0;
        for (const auto& r : rules)
            if (satisfies(r, a)) {
                ++hits;
                owner = r.class_index;
            }
        if (hits == 1) pools[owner].push_back(a);
    }
    for (std::size_t c = 0; c < n_classes; ++c)
        if (pools[c].empty())
            throw ValueError("planted rule for class " + std::to_string(c) +
                             " has no satisfying assignment outside the other rules");
    return pools;
}

void validate_planted_rules(const std::vector<fuzzy::ConjunctiveRule>& rules,
                            std::size_t n_concepts, std::size_t n_classes) {
    planted_pools(rules, n_concepts, n_classes);
}

SyntheticResult gen_synthetic(const SyntheticSpec& spec,
                              const std::filesystem::path& out_dir) {
    if (spec.samples_per_class == 0)
        throw ValueError("gen_synthetic: samples_per_class must be positive");
    if (spec.n_classes < 2) throw ValueError("gen_synthetic: need at least 2 classes");
    if (spec.feature_dim == 0) throw ValueError("gen_synthetic: feature_dim must be positive");
    if (spec.noise_sigma < 0.0) throw ValueError("gen_synthetic: noise_sigma must be >= 0");

    std::vector<fuzzy::ConjunctiveRule> rules = spec.rules;
    if (rules.empty()) {
        if (spec.n_classes != 2)
            throw ValueError("gen_synthetic: built-in rules cover 2 classes; supply rules for " +
                             std::to_string(spec.n_classes));
        rules = default_planted_rules();
    }
    std::sort(rules.begin(), rules.end(),
              [](const auto& a, const auto& b) { return a.class_index < b.class_index; });
    auto pools = planted_pools(rules, spec.n_concepts, spec.n_classes);

    Rng rng(spec.seed);

    // Fixed affine lift: x = A c + b + sigma * eps. Drawn before any sample
    // noise so the map depends only on the seed and dimensions.
    Tensor lift({spec.feature_dim, spec.n_concepts});
    Tensor bias({spec.feature_dim});
    double scale = 1.0 / std::sqrt(static_cast<double>(spec.n_concepts));
    for (auto& v : lift.data()) v = rng.normal() * scale;
    for (auto& v : bias.data()) v = rng.normal() * 0.1;

    std::size_t total = spec.samples_per_class * spec.n_classes;
    Dataset d;
    d.n_classes = spec.n_classes;
    d.features = Tensor({total, spec.feature_dim});
    d.concept_labels = Tensor({total, spec.n_concepts});
    for (std::size_t i = 0; i < spec.n_concepts; ++i)
        d.concept_names.push_back("c_" + std::to_string(i));

    std::size_t row = 0;
    for (std::size_t cls = 0; cls < spec.n_classes; ++cls) {
        for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++row) {
            std::uint32_t bits = pools[cls][rng.index(pools[cls].size())];
            for (std::size_t i = 0; i < spec.n_concepts; ++i)
                d.concept_labels.at(row, i) = (bits >> i) & 1u ? 1.0 : 0.0;
            for (std::size_t f = 0; f < spec.feature_dim; ++f) {
                double acc = bias[f];
                for (std::size_t i = 0; i < spec.n_concepts; ++i)
                    acc += lift.at(f, i) * d.concept_labels.at(row, i);
                d.features.at(row, f) = acc + spec.noise_sigma * rng.normal();
            }
            d.labels.push_back(cls);
            char id[16];
            std::snprintf(id, sizeof(id), "s%04zu", row);
            d.ids.push_back(id);
        }
    }

    // Persist all artifacts.
    std::filesystem::create_directories(out_dir / "features");
    DatasetManifest m;
    m.base_dir = out_dir;
    m.feature_dim = spec.feature_dim;
    m.n_classes = spec.n_classes;
    m.concept_labels_csv = "concept_labels.csv";
    m.concept_set = "concepts.json";
    for (std::size_t i = 0; i < total; ++i) {
        Tensor frow({spec.feature_dim});
        for (std::size_t f = 0; f < spec.feature_dim; ++f) frow[f] = d.features.at(i, f);
        std::string rel = "features/" + d.ids[i] + ".micn";
        save_tensor(out_dir / rel, frow);
        m.samples.push_back({d.ids[i], rel, "", d.labels[i]});
    }
    save_manifest(out_dir / "manifest.json", m);
    write_concept_csv(out_dir / m.concept_labels_csv,
                      {d.ids, d.concept_names, d.concept_labels});

    nlohmann::json concepts{{"format_version", 1},
                            {"concepts", d.concept_names},
                            {"embeddings", nullptr},
                            {"embedding_dim", nullptr},
                            {"classes", nullptr}};
    write_text_file(out_dir / "concepts.json", concepts.dump(2) + "\n");

    nlohmann::json rule_list = nlohmann::json::array();
    for (const auto& r : rules) {
        nlohmann::json lits = nlohmann::json::array();
        for (const auto& lit : r.normalized().literals)
            lits.push_back({{"concept", lit.concept_index}, {"positive", lit.positive}});
        rule_list.push_back({{"class", r.class_index},
                             {"text", fuzzy::format_rule(r, d.concept_names)},
                             {"literals", lits}});
    }
    write_text_file(out_dir / "ground_truth_rules.json",
                    nlohmann::json{{"rules", rule_list}}.dump(2) + "\n");

    // Reload features from disk so callers see exactly the stored precision.
    Dataset reloaded = load_dataset(load_manifest(out_dir / "manifest.json"));
    return {std::move(m), std::move(reloaded), std::move(rules)};
}

}  // namespace micns::data
