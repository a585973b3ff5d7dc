#include "fusecond/inspect.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "fusecond/config.hpp"
#include "fusecond/error.hpp"
#include "fusecond/fusion.hpp"
#include "fusecond/matrix.hpp"
#include "fusecond/pipeline.hpp"
#include "fusecond/tensor_io.hpp"

namespace fusecond {

bool InspectReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const InspectCheck& c) { return c.passed; });
}

const InspectCheck* InspectReport::find(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

namespace {

struct SourceLine {
    std::string name;
    std::map<std::string, std::string> fields;
};

struct SourcesFile {
    std::map<std::string, std::string> header;
    std::vector<SourceLine> sources;
};

SourcesFile parse_sources(const std::string& text) {
    SourcesFile out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string first;
        ls >> first;
        if (first == "source") {
            SourceLine s;
            ls >> s.name;
            std::string kv;
            while (ls >> kv) {
                const auto eq = kv.find('=');
                if (eq != std::string::npos) s.fields[kv.substr(0, eq)] = kv.substr(eq + 1);
            }
            out.sources.push_back(std::move(s));
        } else if (const auto eq = first.find('='); eq != std::string::npos) {
            out.header[first.substr(0, eq)] = first.substr(eq + 1);
        }
    }
    return out;
}

class Inspector {
public:
    explicit Inspector(std::filesystem::path dir) : dir_(std::move(dir)) {}

    template <typename Fn>
    auto load(const std::string& file, Fn&& fn) -> std::optional<decltype(fn(std::filesystem::path{}))> {
        const auto path = dir_ / file;
        if (!std::filesystem::exists(path)) {
            report_.missing.push_back(file);
            return std::nullopt;
        }
        try {
            return fn(path);
        } catch (const Error& e) {
            report_.missing.push_back(file + " (" + e.what() + ")");
            return std::nullopt;
        }
    }

    std::optional<std::vector<std::size_t>> load_index(const std::string& file) {
        return load(file, [](const auto& p) { return parse_index_file(read_file(p)).first; });
    }

    std::optional<Tensor> load_tensor_file(const std::string& file) {
        return load(file, [](const auto& p) { return load_tensor(p); });
    }

    void check(const std::string& name, bool passed, const std::string& detail) {
        report_.checks.push_back({name, passed, detail});
    }

    InspectReport run();

private:
    std::filesystem::path dir_;
    InspectReport report_;
    std::ostringstream text_;
};

std::string join(const std::vector<std::size_t>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? " " : "") + std::to_string(values[i]);
    return out;
}

InspectReport Inspector::run() {
    const auto sources_text = load("sources.txt", [](const auto& p) { return read_file(p); });
    if (!sources_text) {
        text_ << "[run]\nstatus=absent\n";
        report_.text = text_.str();
        return report_;
    }
    const SourcesFile sources = parse_sources(*sources_text);
    const std::size_t voxels = std::stoull(sources.header.at("voxels"));
    const std::size_t registers = std::stoull(sources.header.at("registers"));
    std::optional<PipelineConfig> manifest = load("manifest.txt", [](const auto& p) { return parse_config(read_file(p)); });

    text_ << "[run]\n";
    text_ << "mode=" << sources.header.at("mode") << '\n';
    text_ << "voxels=" << voxels << '\n';

    const auto provenance = load("unified_tokens.provenance", [](const auto& p) { return parse_provenance(read_file(p)); });
    if (provenance) text_ << "unified_tokens=" << provenance->size() << '\n';

    double worst_row_sum = 0.0;
    double worst_score = 0.0;
    bool scores_checked = false;
    std::vector<std::vector<std::size_t>> aligned_sets;
    std::map<std::string, double> lambdas;

    for (const auto& src : sources.sources) {
        text_ << "[source " << src.name << "]\n";
        const bool is_global = src.name == "global";
        if (provenance) {
            const SourceId id = SourceId::parse(src.name);
            std::size_t rows = 0;
            for (const auto& p : *provenance) rows += p.source == id ? 1 : 0;
            text_ << "token_rows=" << rows << '\n';
        }
        for (const auto& [k, v] : src.fields) text_ << k << '=' << v << '\n';
        if (auto it = src.fields.find("lambda"); it != src.fields.end()) lambdas[src.name] = std::stod(it->second);

        const auto scores = load_tensor_file(src.name + ".scores.tensor");
        if (scores) {
            text_ << "score_histogram="
                  << join(score_histogram(std::vector<double>(scores->values.begin(), scores->values.end()))) << '\n';
        } else {
            text_ << "score_histogram=absent\n";
        }

        const auto logits_t = load_tensor_file(src.name + ".logits.tensor");
        const auto patches = load_index(src.name + ".patches.idx");
        if (logits_t && logits_t->dims.size() == 2) {
            Matrix logits = to_matrix(*logits_t);
            if (!is_global) {
                // Token-axis softmax rows.
                for (std::size_t i = 0; i < logits.rows(); ++i) {
                    auto row = logits.row(i);
                    softmax_inplace(row);
                    double sum = 0.0;
                    for (double p : row) sum += p;
                    worst_row_sum = std::max(worst_row_sum, std::abs(sum - 1.0));
                    if (scores && patches && scores->values.size() == logits.rows()) {
                        double s = 0.0;
                        for (auto j : *patches) s += row[1 + registers + j];
                        worst_score = std::max(worst_score, std::abs(s - scores->values[i]));
                        scores_checked = true;
                    }
                }
            } else {
                // Voxel-axis softmax columns.
                std::vector<double> column(logits.rows());
                for (std::size_t j = 0; j < logits.cols(); ++j) {
                    for (std::size_t i = 0; i < logits.rows(); ++i) column[i] = logits(i, j);
                    softmax_inplace(column);
                    double sum = 0.0;
                    for (double p : column) sum += p;
                    worst_row_sum = std::max(worst_row_sum, std::abs(sum - 1.0));
                }
            }
        }
        if (!is_global) {
            if (auto refined = load_index(src.name + ".voxels.idx")) aligned_sets.push_back(*refined);
        }
    }

    check("softmax_row_sums", worst_row_sum <= 1e-6, "max |sum - 1| = " + format_double(worst_row_sum));
    if (scores_checked) {
        check("forward_scores_recomputed", worst_score <= 1e-4, "max |score - recomputed| = " + format_double(worst_score));
    }

    text_ << "[coverage]\n";
    if (const auto unaligned = load_index("unaligned.idx")) {
        std::vector<std::uint8_t> in_union(voxels, 0);
        bool in_range = true;
        for (const auto& set : aligned_sets) {
            for (auto i : set) {
                if (i < voxels) {
                    in_union[i] = 1;
                } else {
                    in_range = false;
                }
            }
        }
        bool disjoint = true;
        std::vector<std::uint8_t> covered = in_union;
        for (auto i : *unaligned) {
            if (i >= voxels) {
                in_range = false;
                continue;
            }
            if (in_union[i]) disjoint = false;
            covered[i] = 1;
        }
        const bool complete = std::all_of(covered.begin(), covered.end(), [](std::uint8_t c) { return c != 0; });
        text_ << "unaligned=" << unaligned->size() << '\n';
        text_ << "complete=" << (complete ? "yes" : "no") << '\n';
        text_ << "disjoint=" << (disjoint ? "yes" : "no") << '\n';
        check("complement_law", complete && disjoint && in_range,
              std::string("complete=") + (complete ? "yes" : "no") + " disjoint=" + (disjoint ? "yes" : "no"));
    } else {
        text_ << "status=absent\n";
        check("complement_law", false, "unaligned.idx missing");
    }

    text_ << "[enhancement]\n";
    if (!std::filesystem::exists(dir_ / "enhancement.tensor")) {
        text_ << "status=absent\n";
    } else if (auto e = load_tensor_file("enhancement.tensor"); e && e->dims.size() == 2) {
        const auto total = e->values.size();
        const auto scaled = std::count_if(e->values.begin(), e->values.end(), [](float v) { return v != 1.0f; });
        const bool uniform = scaled == 0;
        text_ << "shape=" << e->dims[0] << "x" << e->dims[1] << '\n';
        text_ << "density=" << format_double(total ? static_cast<double>(scaled) / static_cast<double>(total) : 0.0)
              << '\n';
        text_ << "uniform_one=" << (uniform ? "yes" : "no") << '\n';
        const float lo = *std::min_element(e->values.begin(), e->values.end());
        const float hi = *std::max_element(e->values.begin(), e->values.end());
        text_ << "min=" << format_double(lo) << '\n' << "max=" << format_double(hi) << '\n';

        // Rebuild E from the dumped selections and lambdas and compare cell by cell.
        if (provenance && e->dims[1] == provenance->size() && e->dims[0] == voxels) {
            std::vector<float> expected(total, 1.0f);
            std::vector<std::uint8_t> touched(total, 0);
            bool inputs_ok = true;
            for (const auto& src : sources.sources) {
                const auto rows = load_index(src.name == "global" ? "unaligned.idx" : src.name + ".voxels.idx");
                if (!rows || !lambdas.count(src.name)) {
                    inputs_ok = false;
                    continue;
                }
                const SourceId id = SourceId::parse(src.name);
                const auto lambda = static_cast<float>(lambdas[src.name]);
                for (std::size_t j = 0; j < provenance->size(); ++j) {
                    const auto& p = (*provenance)[j];
                    if (p.source != id || p.kind != TokenKind::patch) continue;
                    for (auto i : *rows) {
                        const std::size_t cell = i * provenance->size() + j;
                        expected[cell] = touched[cell] ? std::max(expected[cell], lambda) : lambda;
                        touched[cell] = 1;
                    }
                }
            }
            const bool match = inputs_ok && expected == e->values;
            check("enhancement_rebuild", match, match ? "E matches selections and lambdas" : "E differs from rebuild");
        }
    } else {
        text_ << "status=unreadable\n";
    }

    text_ << "[slat]\n";
    for (const char* name : {"initial.slat", "final.slat"}) {
        if (!std::filesystem::exists(dir_ / name)) continue;
        if (auto slat = load(name, [](const auto& p) { return load_slat(p); })) {
            text_ << name << "=" << slat->voxel_count() << "x" << slat->channels() << '\n';
            check(std::string(name) + "_voxels", slat->voxel_count() == voxels,
                  std::to_string(slat->voxel_count()) + " voxels");
        }
    }
    if (manifest) {
        text_ << "[manifest]\nseed=" << manifest->seed << '\n';
    }

    text_ << "[checks]\n";
    for (const auto& c : report_.checks) {
        text_ << c.name << '=' << (c.passed ? "pass" : "FAIL") << "  # " << c.detail << '\n';
    }
    if (!report_.missing.empty()) {
        text_ << "[missing]\n";
        for (const auto& m : report_.missing) text_ << m << '\n';
    }
    report_.text = text_.str();
    return report_;
}

}  // namespace

InspectReport inspect(const std::filesystem::path& dir) { return Inspector(dir).run(); }

}  // namespace fusecond
