#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <string>

#include <boost/crc.hpp>

#include "mlc/bit_io.hpp"
#include "mlc/error.hpp"
#include "mlc/payload.hpp"

namespace mlc {

// "MLC1" | varint version | varint codec | config varints | 5 x (varint len, bytes) | CRC32 LE.
inline constexpr std::array<std::uint8_t, 4> kMagic{'M', 'L', 'C', '1'};
inline constexpr std::uint64_t kFormatVersion = 1;

namespace detail {

inline std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    boost::crc_32_type crc;
    crc.process_bytes(bytes.data(), bytes.size());
    return crc.checksum();
}

inline std::uint32_t narrow_u32(std::uint64_t v, const char* what) {
    if (v > 0xFFFFFFFFull) throw FormatError(std::string(what) + " out of range");
    return static_cast<std::uint32_t>(v);
}

// Parses everything after the magic up to (not including) the CRC.
inline Payload parse_body(ByteReader& r) {
    const auto version = r.get_varint();
    if (version != kFormatVersion)
        throw UnknownVersionError("container version " + std::to_string(version) + ", this build reads version " +
                                  std::to_string(kFormatVersion));
    Payload p;
    const auto codec = r.get_varint();
    if (codec < 1 || codec > 3) throw FormatError("unknown codec id " + std::to_string(codec));
    p.codec = static_cast<CodecId>(codec);
    auto& c = p.config;
    c.p_mask.num = r.get_varint();
    c.p_mask.den = r.get_varint();
    c.window = r.get_varint();
    c.max_run = r.get_varint();
    c.k = r.get_varint();
    const auto mode = r.get_varint();
    if (mode > 2) throw FormatError("unknown fallback mode " + std::to_string(mode));
    c.mode = static_cast<FallbackMode>(mode);
    c.beta.num = r.get_varint();
    c.beta.den = r.get_varint();
    c.vocab_size = narrow_u32(r.get_varint(), "vocabulary size");
    c.token_count = r.get_varint();
    c.char_count = r.get_varint();
    c.aux_order = narrow_u32(r.get_varint(), "aux coder order");
    c.scale_bits = narrow_u32(r.get_varint(), "scale bits");
    c.options = r.get_varint();
    if (c.p_mask.den == 0 || c.beta.den == 0) throw FormatError("fraction with zero denominator");
    if (c.scale_bits != kScaleBits) throw FormatError("unsupported table scale 2^" + std::to_string(c.scale_bits));
    for (Bytes* s : {&p.positions, &p.kept, &p.flags, &p.ranks, &p.fallback}) {
        const auto len = r.get_varint();
        if (len > r.remaining()) throw TruncatedError("stream length exceeds container size");
        const auto b = r.get_bytes(static_cast<std::size_t>(len));
        s->assign(b.begin(), b.end());
    }
    if (r.remaining() != 0) throw FormatError("trailing bytes after the last stream");
    return p;
}

}  // namespace detail

inline Bytes write_payload(const Payload& p) {
    ByteWriter w;
    w.put_bytes(kMagic);
    w.put_varint(kFormatVersion);
    w.put_varint(static_cast<std::uint64_t>(p.codec));
    const auto& c = p.config;
    w.put_varint(c.p_mask.num);
    w.put_varint(c.p_mask.den);
    w.put_varint(c.window);
    w.put_varint(c.max_run);
    w.put_varint(c.k);
    w.put_varint(static_cast<std::uint64_t>(c.mode));
    w.put_varint(c.beta.num);
    w.put_varint(c.beta.den);
    w.put_varint(c.vocab_size);
    w.put_varint(c.token_count);
    w.put_varint(c.char_count);
    w.put_varint(c.aux_order);
    w.put_varint(c.scale_bits);
    w.put_varint(c.options);
    for (const Bytes* s : {&p.positions, &p.kept, &p.flags, &p.ranks, &p.fallback}) {
        w.put_varint(s->size());
        w.put_bytes(*s);
    }
    const auto crc = detail::crc32(w.bytes());
    w.put_u32le(crc);
    return w.take();
}

// Error precedence: truncated header, bad magic, then CRC. A CRC mismatch whose body cannot be
// parsed to the end is reported as truncation; otherwise as a bad CRC.
inline Payload read_payload(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kMagic.size()) throw TruncatedError("container shorter than its magic");
    if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw BadMagicError("not an MLC1 container");
    if (bytes.size() < kMagic.size() + 4) throw TruncatedError("container shorter than magic plus CRC");
    const auto body = bytes.first(bytes.size() - 4);
    ByteReader tail(bytes.last(4));
    const auto stored = tail.get_u32le();
    if (detail::crc32(body) != stored) {
        ByteReader r(body.subspan(kMagic.size()));
        try {
            (void)detail::parse_body(r);
        } catch (const TruncatedError&) {
            throw;
        } catch (const FormatError&) {
            // structurally broken but complete: the CRC is the authoritative verdict
        }
        throw BadCrcError("CRC32 mismatch");
    }
    ByteReader r(body.subspan(kMagic.size()));
    return detail::parse_body(r);
}

// Stream and container bits of a payload as it would be written.
inline CostLedger ledger_of(const Payload& p) {
    CostLedger l;
    l.pos_bits = 8 * p.positions.size();
    l.tok_bits = 8 * p.kept.size();
    l.flag_bits = 8 * p.flags.size();
    l.rank_bits = 8 * p.ranks.size();
    l.fallback_bits = 8 * p.fallback.size();
    l.container_bits = 8 * write_payload(p).size() - l.stream_bits();
    return l;
}

}  // namespace mlc
