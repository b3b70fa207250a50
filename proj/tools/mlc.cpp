// mlc: compress, decompress, patch, apply-patch, sweep, plotdata.
// Exit codes: 0 ok, 1 usage / IO / bad UTF-8 / config, 2 container or integrity failure, 3 predictor failure.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mlc/mlc.hpp"

namespace {

using nlohmann::json;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_input(const std::string& path) {
    if (path == "-") return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, std::string_view data) {
    if (path == "-") {
        std::cout.write(data.data(), static_cast<std::streamsize>(data.size()));
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write " + path);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw UsageError("write failed: " + path);
}

std::string read_text(const std::string& path) {
    auto text = read_input(path);
    if (!mlc::valid_utf8(text)) throw UsageError(path + " is not valid UTF-8");
    return text;
}

std::string sidecar_path(const std::string& payload) { return payload + ".tok.json"; }

// Predictor and tokenizer travel together: the server tokenizer needs the extern predictor.
struct Model {
    mlc::PredictorPtr predictor;
    std::unique_ptr<mlc::Tokenizer> tokenizer;
    json sidecar;
};

std::string resolve_predictor(std::string pred_id) {
    // a bare "extern:" takes its endpoint from MLC_ENDPOINT
    if (const char* ep = std::getenv("MLC_ENDPOINT"); ep && *ep && pred_id == "extern:") pred_id += ep;
    return pred_id;
}

// `corpus_text` builds the word vocabulary; `sidecar` (if set) restores a stored tokenizer.
Model make_model(const std::string& predictor_id, const std::string& tokenizer_kind, std::string_view corpus_text,
                 const std::optional<json>& sidecar) {
    Model m;
    std::string kind = tokenizer_kind;
    if (sidecar) kind = sidecar->value("tokenizer", std::string("byte"));
    const auto pred_id = resolve_predictor(predictor_id);

    if (kind == "byte") {
        m.tokenizer = std::make_unique<mlc::ByteTokenizer>();
        m.sidecar = {{"tokenizer", "byte"}};
    } else if (kind == "word") {
        auto w = sidecar ? mlc::WordTokenizer::from_json(*sidecar) : mlc::WordTokenizer::build(corpus_text);
        m.sidecar = w.to_json();
        m.tokenizer = std::make_unique<mlc::WordTokenizer>(std::move(w));
    } else if (kind == "server") {
        if (pred_id.rfind("extern:", 0) != 0) throw UsageError("--tokenizer server needs an extern: predictor");
        auto ext = std::make_shared<const mlc::ExternPredictor>(std::string_view(pred_id).substr(7));
        m.tokenizer = std::make_unique<mlc::ServerTokenizer>(ext);
        m.predictor = ext;
        m.sidecar = {{"tokenizer", "server"}};
    } else {
        throw UsageError("unknown tokenizer '" + kind + "' (expected byte, word or server)");
    }
    if (!m.predictor) m.predictor = mlc::make_predictor(pred_id, m.tokenizer->vocab_size());
    if (m.predictor->vocab_size() != m.tokenizer->vocab_size())
        throw UsageError("predictor vocabulary " + std::to_string(m.predictor->vocab_size()) +
                         " differs from tokenizer vocabulary " + std::to_string(m.tokenizer->vocab_size()));
    m.sidecar["predictor"] = pred_id;
    return m;
}

std::optional<json> load_sidecar(const std::string& payload_path) {
    if (payload_path == "-" || !std::filesystem::exists(sidecar_path(payload_path))) return std::nullopt;
    try {
        return json::parse(read_input(sidecar_path(payload_path)));
    } catch (const json::exception& e) {
        throw UsageError("unreadable tokenizer sidecar: " + std::string(e.what()));
    }
}

void store_sidecar(const std::string& payload_path, const Model& m) {
    if (payload_path == "-") return;
    write_output(sidecar_path(payload_path), m.sidecar.dump() + "\n");
}

json ledger_json(const mlc::CostLedger& l, std::uint64_t chars) {
    return {{"pos_bits", l.pos_bits},
            {"pos_realized_bits", l.pos_realized_bits},
            {"tok_bits", l.tok_bits},
            {"tok_ideal_bits", l.tok_ideal_bits},
            {"flag_bits", l.flag_bits},
            {"rank_bits", l.rank_bits},
            {"fallback_bits", l.fallback_bits},
            {"fallback_ideal_bits", l.fallback_ideal_bits},
            {"container_bits", l.container_bits},
            {"total_bits", l.total_bits()},
            {"static_bits", l.static_bits},
            {"n_copies", l.n_copies},
            {"chars", chars},
            {"bpc", mlc::bpc(l, std::max<std::uint64_t>(chars, 1))},
            {"amortised_bpc", mlc::amortised_bpc(l, std::max<std::uint64_t>(chars, 1))}};
}

struct CodecFlags {
    std::string codec = "epc";
    std::string p_mask = "0.6";
    std::uint32_t k = 4;
    std::string mode = "full";
    std::string beta = "0";
    std::size_t window = 64;
    std::size_t max_run = 16;
    unsigned aux_order = 0;
    bool full_context = false;
};

struct ModelFlags {
    std::string predictor = "builtin:order0";
    std::string tokenizer = "byte";
    std::optional<std::uint64_t> static_bytes;
    std::uint64_t n_copies = 1;
    std::string ledger;
};

struct DecodeFlags {
    unsigned refine = 0;
    std::size_t chunk = 8;

    [[nodiscard]] mlc::DecodeOptions options() const {
        mlc::DecodeOptions o;
        o.chunk = chunk;
        if (refine > 0) {
            o.refine = mlc::RefineConfig{};
            o.refine.iterations = refine;
            o.refine.chunk = chunk;
        }
        return o;
    }
};

void add_model_flags(CLI::App* cmd, ModelFlags& f, bool with_tokenizer) {
    cmd->add_option("--predictor", f.predictor, "builtin:order0 | builtin:order1 | extern:<endpoint>");
    if (with_tokenizer) cmd->add_option("--tokenizer", f.tokenizer, "byte | word | server");
    cmd->add_option("--static-bytes", f.static_bytes, "Static artefact bytes (default: predictor + tokenizer)");
    cmd->add_option("--n-copies", f.n_copies, "Documents sharing the static artefacts")->check(CLI::PositiveNumber);
    cmd->add_option("--ledger", f.ledger, "Write the cost ledger as JSON to this file ('-' for stderr)");
}

void add_codec_flags(CLI::App* cmd, CodecFlags& f, bool with_codec) {
    if (with_codec) cmd->add_option("--codec", f.codec, "pm | epc");
    if (with_codec) cmd->add_option("--p-mask", f.p_mask, "Masking rate in [0, 1), decimal or n/d");
    cmd->add_option("--k", f.k, "Rank threshold K");
    cmd->add_option("--mode", f.mode, "Fallback mode: off | budget | full");
    cmd->add_option("--beta", f.beta, "Fallback budget for mode=budget");
    if (with_codec) {
        cmd->add_option("--window", f.window, "Equalisation window");
        cmd->add_option("--max-run", f.max_run, "Longest masked run");
        cmd->add_option("--aux-order", f.aux_order, "Kept-token coder order (0 or 1)");
    } else {
        cmd->add_flag("--full-context", f.full_context, "Condition on the whole reconstruction");
    }
}

void add_decode_flags(CLI::App* cmd, DecodeFlags& f) {
    cmd->add_option("--refine", f.refine, "Refinement iterations over SKIP positions (0 = off)");
    cmd->add_option("--chunk", f.chunk, "Infilling chunk size (0 = one shot)");
}

void emit_ledger(const ModelFlags& f, const Model& m, mlc::CostLedger l, std::uint64_t chars) {
    l.static_bits = 8 * f.static_bytes.value_or(m.predictor->static_bytes() + m.tokenizer->static_bytes());
    l.n_copies = f.n_copies;
    const auto j = ledger_json(l, chars).dump(2) + "\n";
    if (f.ledger == "-") std::cerr << j;
    else if (!f.ledger.empty()) write_output(f.ledger, j);
}

int cmd_compress(const std::string& in, const std::string& out, const CodecFlags& c, const ModelFlags& f) {
    const auto text = read_text(in);
    const auto m = make_model(f.predictor, f.tokenizer, text, std::nullopt);
    const auto tokens = m.tokenizer->encode(text);
    const auto chars = mlc::char_count(text);
    const mlc::PMConfig pm{mlc::Rational::parse(c.p_mask), c.window, c.max_run, c.aux_order};
    mlc::Payload payload;
    mlc::CostLedger ledger;
    switch (mlc::parse_codec(c.codec)) {
        case mlc::CodecId::pm: {
            auto r = mlc::pm_compress(tokens, chars, *m.predictor, pm);
            payload = std::move(r.payload);
            ledger = r.ledger;
            break;
        }
        case mlc::CodecId::epc: {
            const mlc::EPCConfig cfg{pm, c.k, mlc::parse_fallback_mode(c.mode), mlc::Rational::parse(c.beta)};
            auto r = mlc::epc_compress(tokens, chars, *m.predictor, cfg);
            payload = std::move(r.payload);
            ledger = r.ledger;
            break;
        }
        case mlc::CodecId::patch:
            throw UsageError("use the patch subcommand to build patches");
    }
    const auto bytes = mlc::write_payload(payload);
    write_output(out, {reinterpret_cast<const char*>(bytes.data()), bytes.size()});
    store_sidecar(out, m);
    emit_ledger(f, m, ledger, chars);
    return 0;
}

int cmd_decompress(const std::string& in, const std::string& out, const ModelFlags& f, const DecodeFlags& d,
                   bool predictor_given) {
    const auto raw = read_input(in);
    const auto sidecar = load_sidecar(in);
    auto pred_id = f.predictor;
    if (!predictor_given && sidecar) pred_id = sidecar->value("predictor", pred_id);
    const auto m = make_model(pred_id, "byte", {}, sidecar);
    const auto payload = mlc::read_payload({reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()});
    mlc::TokenSeq tokens;
    switch (payload.codec) {
        case mlc::CodecId::pm: tokens = mlc::pm_decompress(payload, *m.predictor, d.options()); break;
        case mlc::CodecId::epc: tokens = mlc::epc_decompress(payload, *m.predictor, d.options()).tokens; break;
        case mlc::CodecId::patch: throw UsageError("payload is a patch; use apply-patch");
    }
    const auto text = m.tokenizer->decode(tokens);
    write_output(out, text);
    emit_ledger(f, m, mlc::ledger_of(payload), payload.config.char_count);
    return 0;
}

int cmd_patch(const std::string& original, const std::string& recon, const std::string& out, const CodecFlags& c,
              const ModelFlags& f) {
    const auto a = read_text(original);
    const auto b = read_text(recon);
    const auto m = make_model(f.predictor, f.tokenizer, a + b, std::nullopt);
    const auto ta = m.tokenizer->encode(a);
    const auto tb = m.tokenizer->encode(b);
    const mlc::PatchConfig cfg{c.k, mlc::parse_fallback_mode(c.mode), mlc::Rational::parse(c.beta), c.full_context};
    const auto r = mlc::make_patch(ta, tb, mlc::char_count(a), *m.predictor, cfg);
    const auto bytes = mlc::write_payload(r.payload);
    write_output(out, {reinterpret_cast<const char*>(bytes.data()), bytes.size()});
    store_sidecar(out, m);
    emit_ledger(f, m, r.ledger, mlc::char_count(a));
    return 0;
}

int cmd_apply_patch(const std::string& patch, const std::string& recon, const std::string& out, const ModelFlags& f,
                    const DecodeFlags& d, bool predictor_given) {
    const auto raw = read_input(patch);
    const auto sidecar = load_sidecar(patch);
    auto pred_id = f.predictor;
    if (!predictor_given && sidecar) pred_id = sidecar->value("predictor", pred_id);
    const auto m = make_model(pred_id, "byte", {}, sidecar);
    const auto payload = mlc::read_payload({reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()});
    const auto tb = m.tokenizer->encode(read_text(recon));
    const auto r = mlc::apply_patch(tb, payload, *m.predictor, d.options());
    write_output(out, m.tokenizer->decode(r.tokens));
    return 0;
}

struct SweepFlags {
    std::vector<std::string> corpus;
    std::vector<std::string> codecs{"pm", "epc"};
    std::vector<std::string> p_masks{"0.2", "0.4", "0.6", "0.8"};
    std::vector<std::uint32_t> ks{4, 16, 64, 128};
    std::vector<std::string> modes{"off", "full"};
    std::vector<std::string> betas{"0"};
    unsigned seeds = 5;
    std::size_t workers = 1;
    std::size_t doc_chars = 2048;
    std::string csv = "sweep.csv";
    std::string json_out = "sweep.json";
};

int cmd_sweep(const SweepFlags& s, const CodecFlags& c, const ModelFlags& f, const DecodeFlags& d) {
    mlc::SweepConfig cfg;
    cfg.codecs.clear();
    for (const auto& x : s.codecs) cfg.codecs.push_back(mlc::parse_codec(x));
    cfg.p_masks.clear();
    for (const auto& x : s.p_masks) cfg.p_masks.push_back(mlc::Rational::parse(x));
    cfg.ks = s.ks;
    cfg.modes.clear();
    for (const auto& x : s.modes) cfg.modes.push_back(mlc::parse_fallback_mode(x));
    cfg.betas.clear();
    for (const auto& x : s.betas) cfg.betas.push_back(mlc::Rational::parse(x));
    cfg.seeds = s.seeds;
    cfg.window = c.window;
    cfg.max_run = c.max_run;
    cfg.aux_order = c.aux_order;
    cfg.chunk = d.chunk;
    cfg.refine = d.options().refine;
    cfg.workers = s.workers;
    if (const char* w = std::getenv("MLC_WORKERS"); w && *w) cfg.workers = std::stoul(w);
    cfg.n_copies = f.n_copies;

    auto pred_id = f.predictor;
    if (const char* ep = std::getenv("MLC_ENDPOINT"); ep && *ep) pred_id = std::string("extern:") + ep;
    const auto docs = mlc::load_corpus(s.corpus, s.doc_chars);
    std::string all;
    if (f.tokenizer == "word")
        for (const auto& doc : docs) all += doc.text;
    const auto m = make_model(pred_id, f.tokenizer, all, std::nullopt);
    cfg.static_bytes = f.static_bytes.value_or(m.predictor->static_bytes() + m.tokenizer->static_bytes());
    const auto prepared = mlc::prepare(docs, *m.tokenizer);
    const auto rows = mlc::run_sweep(cfg, prepared, *m.tokenizer, *m.predictor);
    write_output(s.csv, mlc::to_csv(rows));
    auto j = mlc::to_json(rows);
    j["metadata"]["predictor"] = m.predictor->name();
    j["metadata"]["tokenizer"] = m.tokenizer->name();
    j["metadata"]["documents"] = prepared.size();
    j["metadata"]["static_bytes"] = cfg.static_bytes;
    j["metadata"]["n_copies"] = cfg.n_copies;
    write_output(s.json_out, j.dump(2) + "\n");
    bool ok = true;
    for (const auto& r : rows) ok = ok && r.ledger_ok && r.seed_invariant;
    if (!ok) {
        std::cerr << "mlc: ledger identity or seed invariance violated; see ledger_ok / seed_invariant columns\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Masked-language-model text compression"};
    app.require_subcommand(1);

    CodecFlags codec;
    ModelFlags model;
    DecodeFlags decode;
    std::string in = "-";
    std::string out = "-";
    std::string recon;

    auto* compress = app.add_subcommand("compress", "Compress UTF-8 text into an MLC1 container");
    compress->add_option("input", in, "Text file or '-'");
    compress->add_option("-o,--output", out, "Container path or '-'");
    add_codec_flags(compress, codec, true);
    add_model_flags(compress, model, true);

    auto* decompress = app.add_subcommand("decompress", "Decode an MLC1 container to text");
    decompress->add_option("input", in, "Container file or '-'");
    decompress->add_option("-o,--output", out, "Text path or '-'");
    add_model_flags(decompress, model, false);
    add_decode_flags(decompress, decode);

    std::string original;
    auto* patch = app.add_subcommand("patch", "Encode a residual patch turning a reconstruction into the original");
    patch->add_option("--original", original, "Original text")->required();
    patch->add_option("--recon", recon, "Reconstructed text")->required();
    patch->add_option("-o,--output", out, "Patch container path or '-'");
    add_codec_flags(patch, codec, false);
    add_model_flags(patch, model, true);

    auto* apply = app.add_subcommand("apply-patch", "Apply a residual patch to a reconstruction");
    apply->add_option("input", in, "Patch container")->required();
    apply->add_option("--recon", recon, "Reconstructed text")->required();
    apply->add_option("-o,--output", out, "Text path or '-'");
    add_model_flags(apply, model, false);
    add_decode_flags(apply, decode);

    SweepFlags sweep_flags;
    auto* sweep = app.add_subcommand("sweep", "Rate-distortion sweep over a corpus");
    sweep->set_config("--config", "", "key = value config file replacing flags");
    sweep->add_option("corpus", sweep_flags.corpus, "Corpus files or directories")->required();
    sweep->add_option("--codecs", sweep_flags.codecs, "pm, epc, patch")->delimiter(',');
    sweep->add_option("--p-masks", sweep_flags.p_masks, "Masking rates")->delimiter(',');
    sweep->add_option("--ks", sweep_flags.ks, "Rank thresholds")->delimiter(',');
    sweep->add_option("--modes", sweep_flags.modes, "Fallback modes")->delimiter(',');
    sweep->add_option("--betas", sweep_flags.betas, "Fallback budgets for mode=budget")->delimiter(',');
    sweep->add_option("--seeds", sweep_flags.seeds, "Seeds per grid point");
    sweep->add_option("--workers", sweep_flags.workers, "Worker threads (env MLC_WORKERS overrides)");
    sweep->add_option("--doc-chars", sweep_flags.doc_chars, "Target document length in characters");
    sweep->add_option("--csv", sweep_flags.csv, "CSV output path");
    sweep->add_option("--json", sweep_flags.json_out, "JSON output path");
    sweep->add_option("--window", codec.window, "Equalisation window");
    sweep->add_option("--max-run", codec.max_run, "Longest masked run");
    sweep->add_option("--aux-order", codec.aux_order, "Kept-token coder order (0 or 1)");
    add_model_flags(sweep, model, true);
    add_decode_flags(sweep, decode);

    std::string plot_in;
    std::string rate_col = "bpc";
    std::string fid_col = "char_fid";
    auto* plot = app.add_subcommand("plotdata", "Pareto-front series from a sweep CSV");
    plot->add_option("input", plot_in, "Sweep CSV")->required();
    plot->add_option("-o,--output", out, "JSON path or '-'");
    plot->add_option("--rate", rate_col, "Rate column");
    plot->add_option("--fidelity", fid_col, "Fidelity column");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    auto predictor_given = [&](CLI::App* cmd) { return cmd->count("--predictor") > 0; };
    try {
        if (*compress) return cmd_compress(in, out, codec, model);
        if (*decompress) return cmd_decompress(in, out, model, decode, predictor_given(decompress));
        if (*patch) return cmd_patch(original, recon, out, codec, model);
        if (*apply) return cmd_apply_patch(in, recon, out, model, decode, predictor_given(apply));
        if (*sweep) return cmd_sweep(sweep_flags, codec, model, decode);
        if (*plot) {
            write_output(out, mlc::plotdata_from_csv(read_input(plot_in), rate_col, fid_col).dump(2) + "\n");
            return 0;
        }
    } catch (const mlc::FormatError& e) {
        std::cerr << "mlc: " << e.what() << "\n";
        return 2;
    } catch (const mlc::DecodeError& e) {
        std::cerr << "mlc: " << e.what() << "\n";
        return 2;
    } catch (const mlc::AlignmentError& e) {
        std::cerr << "mlc: " << e.what() << "\n";
        return 2;
    } catch (const mlc::PredictorError& e) {
        std::cerr << "mlc: predictor: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "mlc: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
