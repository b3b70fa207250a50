#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mlc/builtin_model.hpp"
#include "mlc/codec_epc.hpp"
#include "mlc/codec_pm.hpp"
#include "mlc/container.hpp"
#include "mlc/error.hpp"
#include "mlc/extern_predictor.hpp"
#include "mlc/metrics.hpp"
#include "mlc/patcher.hpp"
#include "mlc/predictor.hpp"
#include "mlc/text.hpp"

namespace mlc {

// "builtin:order0" | "builtin:order1" | "extern:<endpoint>"
inline PredictorPtr make_predictor(std::string_view id, std::uint32_t vocab_size) {
    if (id == "builtin:order0") return std::make_shared<BuiltinModel>(vocab_size, 0);
    if (id == "builtin:order1") return std::make_shared<BuiltinModel>(vocab_size, 1);
    if (id.substr(0, 7) == "extern:") return std::make_shared<ExternPredictor>(id.substr(7));
    throw ConfigError("unknown predictor '" + std::string(id) +
                      "' (expected builtin:order0, builtin:order1 or extern:<endpoint>)");
}

struct Document {
    std::string name;
    std::string text;
};

// Cuts text at blank-line paragraph boundaries into documents of at least target_chars code
// points (the last one may be shorter). A paragraph is never split.
inline std::vector<Document> split_documents(const std::string& name, std::string_view text,
                                             std::size_t target_chars = 2048) {
    std::vector<Document> out;
    std::string cur;
    std::size_t cur_chars = 0;
    auto flush = [&] {
        if (cur.empty()) return;
        out.push_back({name + "#" + std::to_string(out.size()), std::move(cur)});
        cur.clear();
        cur_chars = 0;
    };
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find("\n\n", pos);
        end = end == std::string_view::npos ? text.size() : end + 2;
        while (end < text.size() && text[end] == '\n') ++end;
        const auto para = text.substr(pos, end - pos);
        cur += para;
        cur_chars += char_count(para);
        if (cur_chars >= target_chars) flush();
        pos = end;
    }
    flush();
    return out;
}

// Files and directories (non-recursive, sorted by name).
inline std::vector<Document> load_corpus(const std::vector<std::string>& paths, std::size_t target_chars = 2048) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    for (const auto& p : paths) {
        if (fs::is_directory(p)) {
            std::vector<fs::path> in_dir;
            for (const auto& e : fs::directory_iterator(p))
                if (e.is_regular_file()) in_dir.push_back(e.path());
            std::sort(in_dir.begin(), in_dir.end());
            files.insert(files.end(), in_dir.begin(), in_dir.end());
        } else if (fs::is_regular_file(p)) {
            files.emplace_back(p);
        } else {
            throw ConfigError("corpus path not found: " + p);
        }
    }
    std::vector<Document> docs;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        const auto text = ss.str();
        if (!valid_utf8(text)) throw ConfigError("corpus file is not valid UTF-8: " + f.string());
        auto parts = split_documents(f.filename().string(), text, target_chars);
        docs.insert(docs.end(), std::make_move_iterator(parts.begin()), std::make_move_iterator(parts.end()));
    }
    if (docs.empty()) throw ConfigError("empty corpus");
    return docs;
}

struct GridPoint {
    CodecId codec = CodecId::pm;
    Rational p_mask{0, 1};
    std::uint32_t k = 0;
    FallbackMode mode = FallbackMode::off;
    Rational beta{0, 1};
};

struct SweepConfig {
    // patch = PM reconstruction followed by a residual patch against it
    std::vector<CodecId> codecs{CodecId::pm, CodecId::epc};
    std::vector<Rational> p_masks{{1, 5}, {2, 5}, {3, 5}, {4, 5}};
    std::vector<std::uint32_t> ks{4, 16, 64, 128};
    std::vector<FallbackMode> modes{FallbackMode::off, FallbackMode::full};
    std::vector<Rational> betas{{0, 1}};
    unsigned seeds = 5;
    std::size_t window = 64;
    std::size_t max_run = 16;
    unsigned aux_order = 0;
    std::size_t chunk = 8;
    RefineConfig refine = RefineConfig::disabled();
    std::size_t workers = 1;
    std::uint64_t static_bytes = 0;
    std::uint64_t n_copies = 1;
};

inline std::vector<GridPoint> expand_grid(const SweepConfig& cfg) {
    std::vector<GridPoint> out;
    for (const auto codec : cfg.codecs) {
        for (const auto& p : cfg.p_masks) {
            if (codec == CodecId::pm) {
                out.push_back({codec, p, 0, FallbackMode::off, {0, 1}});
                continue;
            }
            for (const auto k : cfg.ks) {
                for (const auto mode : cfg.modes) {
                    if (mode == FallbackMode::budget) {
                        for (const auto& b : cfg.betas) out.push_back({codec, p, k, mode, b});
                    } else {
                        out.push_back({codec, p, k, mode, {0, 1}});
                    }
                }
            }
        }
    }
    return out;
}

// One grid point aggregated over every document: bit counts summed, CharFid micro-averaged
// (total edits over total normaliser), ChrF weighted by original character count.
struct RDRow {
    GridPoint point;
    unsigned seeds = 0;
    bool seed_invariant = true;
    std::size_t docs = 0;
    std::uint64_t tokens = 0;
    std::uint64_t chars = 0;
    std::uint64_t masked = 0;
    std::uint64_t skips = 0;
    CostLedger ledger;
    double pos_analytic_bits = 0.0;
    std::uint64_t payload_bytes = 0;
    double char_fid = 0.0;
    double chrf = 0.0;
    double error_bound = 0.0;
    bool ledger_ok = true;
    double wall_ms = 0.0;

    [[nodiscard]] double bpc() const { return mlc::bpc(ledger, std::max<std::uint64_t>(chars, 1)); }
    [[nodiscard]] double amortised_bpc() const { return mlc::amortised_bpc(ledger, std::max<std::uint64_t>(chars, 1)); }
};

inline double binary_entropy(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

namespace detail {

inline void add_ledger(CostLedger& into, const CostLedger& l) {
    into.pos_bits += l.pos_bits;
    into.tok_bits += l.tok_bits;
    into.flag_bits += l.flag_bits;
    into.rank_bits += l.rank_bits;
    into.fallback_bits += l.fallback_bits;
    into.container_bits += l.container_bits;
    into.pos_realized_bits += l.pos_realized_bits;
    into.tok_ideal_bits += l.tok_ideal_bits;
    into.fallback_ideal_bits += l.fallback_ideal_bits;
}

struct DocOutcome {
    Bytes payload;  // concatenated containers, compared across seeds
    CostLedger ledger;
    TokenSeq decoded;
    std::uint64_t masked = 0;
    std::uint64_t skips = 0;
};

inline DocOutcome run_document(const GridPoint& g, const SweepConfig& cfg, std::span<const Token> tokens,
                               std::uint64_t chars, const Predictor& predictor, bool decode) {
    DocOutcome out;
    PMConfig pm{g.p_mask, cfg.window, cfg.max_run, cfg.aux_order};
    DecodeOptions opt;
    opt.chunk = cfg.chunk;
    opt.refine = cfg.refine;
    auto append = [&](const Payload& p, const CostLedger& l) {
        const auto bytes = write_payload(p);
        out.payload.insert(out.payload.end(), bytes.begin(), bytes.end());
        add_ledger(out.ledger, l);
        return read_payload(bytes);
    };
    if (g.codec == CodecId::epc) {
        const auto r = epc_compress(tokens, chars, predictor, EPCConfig{pm, g.k, g.mode, g.beta});
        const auto back = append(r.payload, r.ledger);
        out.masked = r.mask.masked_count();
        out.skips = r.residual.skip_count();
        if (decode) out.decoded = epc_decompress(back, predictor, opt).tokens;
        return out;
    }
    const auto r = pm_compress(tokens, chars, predictor, pm);
    const auto back = append(r.payload, r.ledger);
    out.masked = r.mask.masked_count();
    if (g.codec == CodecId::pm) {
        if (decode) out.decoded = pm_decompress(back, predictor, opt);
        return out;
    }
    // PM reconstruction is needed to build the patch, so this path always decodes
    const auto recon = pm_decompress(back, predictor, opt);
    const auto patch = make_patch(tokens, recon, chars, predictor, PatchConfig{g.k, g.mode, g.beta});
    const auto patch_back = append(patch.payload, patch.ledger);
    out.skips = patch.residual.skip_count();
    if (decode) out.decoded = apply_patch(recon, patch_back, predictor, opt).tokens;
    return out;
}

}  // namespace detail

struct PreparedDoc {
    std::string name;
    std::string text;
    TokenSeq tokens;
    std::uint64_t chars = 0;
    std::u32string code_points;
};

inline std::vector<PreparedDoc> prepare(const std::vector<Document>& docs, const Tokenizer& tok) {
    std::vector<PreparedDoc> out;
    out.reserve(docs.size());
    for (const auto& d : docs) {
        PreparedDoc p;
        p.name = d.name;
        p.text = d.text;
        p.tokens = tok.encode(d.text);
        p.code_points = decode_utf8_lossy(d.text);
        p.chars = p.code_points.size();
        out.push_back(std::move(p));
    }
    return out;
}

inline RDRow run_point(const GridPoint& g, const SweepConfig& cfg, const std::vector<PreparedDoc>& docs,
                       const Tokenizer& tok, const Predictor& predictor) {
    const auto t0 = std::chrono::steady_clock::now();
    RDRow row;
    row.point = g;
    row.seeds = std::max(1u, cfg.seeds);
    std::uint64_t edits = 0;
    std::uint64_t norm = 0;
    double chrf_weighted = 0.0;
    for (const auto& d : docs) {
        auto first = detail::run_document(g, cfg, d.tokens, d.chars, predictor, true);
        // deterministic path: every further seed must reproduce the payload bit for bit
        for (unsigned s = 1; s < row.seeds; ++s) {
            const auto again = detail::run_document(g, cfg, d.tokens, d.chars, predictor, false);
            if (again.payload != first.payload) row.seed_invariant = false;
        }
        ++row.docs;
        row.tokens += d.tokens.size();
        row.chars += d.chars;
        row.masked += first.masked;
        row.skips += first.skips;
        if (first.ledger.total_bits() != 8 * first.payload.size()) row.ledger_ok = false;
        detail::add_ledger(row.ledger, first.ledger);
        row.payload_bytes += first.payload.size();
        const double p_keep = 1.0 - g.p_mask.to_double();
        row.pos_analytic_bits += static_cast<double>(d.tokens.size()) * binary_entropy(p_keep);

        const auto decoded = decode_utf8_lossy(tok.decode(first.decoded));
        edits += levenshtein(d.code_points, decoded);
        norm += std::max<std::size_t>({d.code_points.size(), decoded.size(), 1});
        chrf_weighted += chrf(d.code_points, decoded) * static_cast<double>(d.chars);
    }
    row.ledger.static_bits = 8 * cfg.static_bytes;
    row.ledger.n_copies = std::max<std::uint64_t>(1, cfg.n_copies);
    row.char_fid = norm == 0 ? 1.0 : 1.0 - static_cast<double>(edits) / static_cast<double>(norm);
    row.chrf = row.chars == 0 ? 1.0 : chrf_weighted / static_cast<double>(row.chars);
    const std::uint64_t denom = g.codec == CodecId::patch ? row.tokens : row.masked;
    row.error_bound = denom == 0 ? 0.0 : static_cast<double>(row.skips) / static_cast<double>(denom);
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

// Rows come back in grid order whatever the completion order of the workers.
inline std::vector<RDRow> run_sweep(const SweepConfig& cfg, const std::vector<PreparedDoc>& docs,
                                    const Tokenizer& tok, const Predictor& predictor) {
    if (docs.empty()) throw ConfigError("empty corpus");
    const auto grid = expand_grid(cfg);
    std::vector<RDRow> rows(grid.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr err;
    auto work = [&] {
        for (;;) {
            const auto i = next++;
            if (i >= grid.size()) return;
            try {
                rows[i] = run_point(grid[i], cfg, docs, tok, predictor);
            } catch (...) {
                std::lock_guard lock(err_mutex);
                if (!err) err = std::current_exception();
                next = grid.size();
                return;
            }
        }
    };
    const std::size_t n = std::max<std::size_t>(1, std::min(cfg.workers, grid.size()));
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < n; ++i) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
    return rows;
}

inline const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols{
        "codec", "p_mask", "k", "mode", "beta", "seeds", "seed_invariant", "docs", "tokens", "chars", "masked",
        "pos_bits", "pos_realized_bits", "pos_analytic_bits", "tok_bits", "tok_ideal_bits", "flag_bits", "rank_bits",
        "fallback_bits", "fallback_ideal_bits", "container_bits", "total_bits", "payload_bytes", "bpc",
        "amortised_bpc", "char_fid", "chrf", "bertscore", "error_bound", "skips", "ledger_ok", "wall_ms"};
    return cols;
}

namespace detail {

inline std::string fmt(double v, int prec = 6) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << v;
    return os.str();
}

inline std::vector<std::string> row_fields(const RDRow& r) {
    const auto& g = r.point;
    const auto& l = r.ledger;
    return {std::string(to_string(g.codec)),
            fmt(g.p_mask.to_double(), 4),
            std::to_string(g.k),
            g.codec == CodecId::pm ? "-" : std::string(to_string(g.mode)),
            fmt(g.beta.to_double(), 4),
            std::to_string(r.seeds),
            r.seed_invariant ? "1" : "0",
            std::to_string(r.docs),
            std::to_string(r.tokens),
            std::to_string(r.chars),
            std::to_string(r.masked),
            std::to_string(l.pos_bits),
            std::to_string(l.pos_realized_bits),
            fmt(r.pos_analytic_bits, 1),
            std::to_string(l.tok_bits),
            fmt(l.tok_ideal_bits, 1),
            std::to_string(l.flag_bits),
            std::to_string(l.rank_bits),
            std::to_string(l.fallback_bits),
            fmt(l.fallback_ideal_bits, 1),
            std::to_string(l.container_bits),
            std::to_string(l.total_bits()),
            std::to_string(r.payload_bytes),
            fmt(r.bpc()),
            fmt(r.amortised_bpc()),
            fmt(r.char_fid),
            fmt(r.chrf),
            "unsupported",
            fmt(r.error_bound),
            std::to_string(r.skips),
            r.ledger_ok ? "1" : "0",
            fmt(r.wall_ms, 1)};
}

}  // namespace detail

inline std::string to_csv(const std::vector<RDRow>& rows) {
    std::string out;
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
    out += "\n";
    for (const auto& r : rows) {
        const auto f = detail::row_fields(r);
        for (std::size_t i = 0; i < f.size(); ++i) out += (i ? "," : "") + f[i];
        out += "\n";
    }
    return out;
}

// Mirrors the CSV; numbers are numbers, bertscore is null, and metadata labels the metrics.
inline nlohmann::json to_json(const std::vector<RDRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    const auto& cols = csv_columns();
    for (const auto& r : rows) {
        const auto f = detail::row_fields(r);
        nlohmann::json o;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            const auto& c = cols[i];
            if (c == "codec" || c == "mode") o[c] = f[i];
            else if (c == "bertscore") o[c] = nullptr;
            else if (c == "seed_invariant" || c == "ledger_ok") o[c] = f[i] == "1";
            else o[c] = std::stod(f[i]);
        }
        arr.push_back(std::move(o));
    }
    return {{"metadata",
             {{"char_fid_normaliser", "max(len(original), len(decoded), 1)"},
              {"char_fid_aggregation", "micro: 1 - sum(edits) / sum(normaliser)"},
              {"chrf", "n_max=6, beta=2, whitespace kept, char-weighted mean"},
              {"bertscore", "unsupported"}}},
            {"rows", std::move(arr)}};
}

struct PlotPoint {
    double rate = 0.0;
    double fidelity = 0.0;
    std::string label;
};

// Ascending rate; a point joins the front only if it beats the best fidelity seen at lower rate.
inline std::vector<PlotPoint> pareto_front(std::vector<PlotPoint> pts) {
    std::stable_sort(pts.begin(), pts.end(), [](const PlotPoint& a, const PlotPoint& b) {
        return a.rate != b.rate ? a.rate < b.rate : a.fidelity > b.fidelity;
    });
    std::vector<PlotPoint> front;
    for (const auto& p : pts)
        if (front.empty() || p.fidelity > front.back().fidelity) front.push_back(p);
    return front;
}

// Sweep CSV -> {"series": {name: {"raw": [...], "front": [...]}}}. Series are codec, plus the
// fallback mode for residual codecs.
inline nlohmann::json plotdata_from_csv(std::string_view csv, std::string_view rate_col = "bpc",
                                        std::string_view fid_col = "char_fid") {
    std::vector<std::vector<std::string>> table;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        auto end = csv.find('\n', pos);
        if (end == std::string_view::npos) end = csv.size();
        auto line = csv.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) {
            std::vector<std::string> fields;
            std::size_t a = 0;
            for (;;) {
                const auto c = line.find(',', a);
                fields.emplace_back(line.substr(a, c == std::string_view::npos ? std::string_view::npos : c - a));
                if (c == std::string_view::npos) break;
                a = c + 1;
            }
            table.push_back(std::move(fields));
        }
        pos = end + 1;
    }
    if (table.empty()) throw ConfigError("empty sweep CSV");
    const auto& header = table[0];
    auto col = [&](std::string_view name) {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw ConfigError("sweep CSV lacks column " + std::string(name));
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto c_codec = col("codec");
    const auto c_mode = col("mode");
    const auto c_p = col("p_mask");
    const auto c_k = col("k");
    const auto c_beta = col("beta");
    const auto c_rate = col(rate_col);
    const auto c_fid = col(fid_col);
    std::map<std::string, std::vector<PlotPoint>> series;
    for (std::size_t i = 1; i < table.size(); ++i) {
        const auto& r = table[i];
        if (r.size() != header.size()) throw ConfigError("sweep CSV row " + std::to_string(i) + " has the wrong width");
        std::string name = r[c_codec];
        if (r[c_mode] != "-") name += ":" + r[c_mode];
        std::string label = "p=" + r[c_p];
        if (r[c_codec] != "pm") label += ",K=" + r[c_k];
        if (r[c_mode] == "budget") label += ",beta=" + r[c_beta];
        series[name].push_back({std::stod(r[c_rate]), std::stod(r[c_fid]), label});
    }
    nlohmann::json out;
    out["rate"] = rate_col;
    out["fidelity"] = fid_col;
    auto to_j = [](const std::vector<PlotPoint>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& p : v) a.push_back({{"rate", p.rate}, {"fidelity", p.fidelity}, {"label", p.label}});
        return a;
    };
    for (const auto& [name, pts] : series) out["series"][name] = {{"raw", to_j(pts)}, {"front", to_j(pareto_front(pts))}};
    return out;
}

}  // namespace mlc
