// Compresses a paragraph with PM and EPC under the built-in bigram model and prints the ledger.
#include <cstdio>
#include <string>

#include "mlc/mlc.hpp"

int main() {
    const std::string text =
        "The lighthouse keeper climbed the stairs at dusk, as every evening for thirty years. "
        "The lamp was trimmed, the glass was clean, and the sea below was the colour of slate.";
    const mlc::ByteTokenizer tok;
    const mlc::BuiltinModel model(tok.vocab_size(), 1);
    const auto tokens = tok.encode(text);
    const auto chars = mlc::char_count(text);
    const mlc::PMConfig pm{{3, 5}, 64, 16, 0};

    const auto lossy = mlc::pm_compress(tokens, chars, model, pm);
    const auto pm_text = tok.decode(mlc::pm_decompress(lossy.payload, model));
    std::printf("PM  p=0.6      %6.3f bpc  CharFid %.3f\n", mlc::bpc(lossy.ledger, chars),
                mlc::char_fidelity(mlc::decode_utf8_lossy(text), mlc::decode_utf8_lossy(pm_text)));

    const auto exact = mlc::epc_compress(tokens, chars, model, mlc::EPCConfig{pm, 4, mlc::FallbackMode::full, {0, 1}});
    const auto bytes = mlc::write_payload(exact.payload);
    const auto back = mlc::epc_decompress(mlc::read_payload(bytes), model);
    std::printf("EPC p=0.6 K=4  %6.3f bpc  exact %s  (%zu bytes for %zu chars)\n", mlc::bpc(exact.ledger, chars),
                tok.decode(back.tokens) == text ? "yes" : "no", bytes.size(), static_cast<std::size_t>(chars));
    const auto& l = exact.ledger;
    std::printf("    pos %llu  kept %llu  flags %llu  ranks %llu  fallback %llu  container %llu bits\n",
                static_cast<unsigned long long>(l.pos_bits), static_cast<unsigned long long>(l.tok_bits),
                static_cast<unsigned long long>(l.flag_bits), static_cast<unsigned long long>(l.rank_bits),
                static_cast<unsigned long long>(l.fallback_bits), static_cast<unsigned long long>(l.container_bits));
    return 0;
}
