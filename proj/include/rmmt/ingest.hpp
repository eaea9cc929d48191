#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "rmmt/paren_seq.hpp"

namespace rmmt::ingest {

struct BpDocument {
  ParenSeq seq;
  std::string source;

  std::uint64_t node_count() const { return seq.size() / 2; }
};

enum class BpFormat { text, packed };

// Structural XML scan: element open/close tags become '('/')'. Attributes,
// text, comments, CDATA, processing instructions and DOCTYPE are skipped;
// mismatched or unterminated tags raise malformed_xml.
BpDocument xml_to_bp(std::istream& in, std::string source = "<stream>");
BpDocument xml_to_bp_string(std::string_view xml, std::string source = "<string>");

// '(' / ')' text with arbitrary whitespace. A forest (excess touching zero
// before the end) is accepted unless allow_forest is false.
BpDocument parse_bp_text(std::istream& in, std::string source = "<stream>",
                         bool allow_forest = true);
BpDocument parse_bp_text_string(std::string_view text, std::string source = "<string>",
                                bool allow_forest = true);

// Packed framing: 8-byte little-endian symbol count, then ceil(n/8) bytes,
// bits MSB-first within each byte, 1 = open, zero padding in the last byte.
BpDocument parse_bp_packed(std::istream& in, std::string source = "<stream>");
void serialize_bp(const ParenSeq& seq, BpFormat fmt, std::ostream& out);

// Uniformly random balanced sequence with n matched pairs (cycle-lemma
// rotation of a shuffled multiset). Deterministic across platforms for a
// given seed.
BpDocument random_balanced(std::uint64_t nodes, std::uint64_t seed);

// Loads a file, dispatching on extension and content sniffing:
// .xml / leading '<' => XML, .bp/.txt / leading paren => text, else packed.
BpDocument load_path(const std::string& path);

}  // namespace rmmt::ingest
