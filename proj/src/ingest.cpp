#include "rmmt/ingest.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <vector>

#include "rmmt/error.hpp"

namespace rmmt::ingest {

namespace {

[[noreturn]] void malformed(const std::string& source, const std::string& what) {
  fail(Errc::malformed_xml, source + ": " + what);
}

// Consume characters until the literal terminator has been read.
void skip_until(std::istream& in, std::string_view term, const std::string& source,
                const char* what) {
  std::size_t matched = 0;
  int c;
  while ((c = in.get()) != EOF) {
    if (char(c) == term[matched]) {
      if (++matched == term.size()) return;
    } else {
      matched = char(c) == term[0] ? 1 : 0;
    }
  }
  malformed(source, std::string("unterminated ") + what);
}

// DOCTYPE may carry an internal subset in [ ... ]; skip to the matching '>'.
void skip_doctype(std::istream& in, const std::string& source) {
  int depth = 0;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '[') ++depth;
    else if (c == ']') --depth;
    else if (c == '>' && depth == 0) return;
  }
  malformed(source, "unterminated DOCTYPE");
}

bool name_char(int c) {
  return c != EOF && !std::isspace(c) && c != '>' && c != '/' && c != '<';
}

}  // namespace

BpDocument xml_to_bp(std::istream& in, std::string source) {
  BpDocument doc;
  doc.source = std::move(source);
  std::vector<std::string> stack;
  std::uint64_t roots = 0;
  int c;
  while ((c = in.get()) != EOF) {
    if (c != '<') continue;  // text content is structural noise
    int d = in.peek();
    if (d == EOF) malformed(doc.source, "stray '<' at end of input");
    if (d == '?') {
      in.get();
      skip_until(in, "?>", doc.source, "processing instruction");
      continue;
    }
    if (d == '!') {
      in.get();
      if (in.peek() == '-') {
        in.get();
        if (in.get() != '-') malformed(doc.source, "malformed comment start");
        skip_until(in, "-->", doc.source, "comment");
      } else if (in.peek() == '[') {
        skip_until(in, "[CDATA[", doc.source, "CDATA start");
        skip_until(in, "]]>", doc.source, "CDATA section");
      } else {
        skip_doctype(in, doc.source);
      }
      continue;
    }
    if (d == '/') {
      in.get();
      std::string name;
      while (name_char(in.peek())) name += char(in.get());
      while (std::isspace(in.peek())) in.get();
      if (in.get() != '>') malformed(doc.source, "malformed closing tag </" + name);
      if (name.empty()) malformed(doc.source, "empty closing tag name");
      if (stack.empty()) malformed(doc.source, "closing tag </" + name + "> with no open element");
      if (stack.back() != name)
        malformed(doc.source, "closing tag </" + name + "> does not match <" + stack.back() + ">");
      stack.pop_back();
      doc.seq.push_back(false);
      continue;
    }
    std::string name;
    while (name_char(in.peek())) name += char(in.get());
    if (name.empty()) malformed(doc.source, "empty tag name");
    // attributes: scan to '>' honoring quotes; '/>' self-closes
    bool self_close = false;
    for (;;) {
      int e = in.get();
      if (e == EOF) malformed(doc.source, "unterminated tag <" + name);
      if (e == '"' || e == '\'') {
        int q = e;
        do {
          e = in.get();
          if (e == EOF) malformed(doc.source, "unterminated attribute value in <" + name);
        } while (e != q);
        continue;
      }
      if (e == '/' && in.peek() == '>') {
        in.get();
        self_close = true;
        break;
      }
      if (e == '>') break;
    }
    if (stack.empty()) ++roots;
    doc.seq.push_back(true);
    if (self_close)
      doc.seq.push_back(false);
    else
      stack.push_back(std::move(name));
  }
  if (!stack.empty())
    malformed(doc.source, "unclosed element <" + stack.back() + "> at end of input");
  if (roots == 0) malformed(doc.source, "no root element");
  if (roots > 1) malformed(doc.source, "multiple root elements");
  return doc;
}

BpDocument xml_to_bp_string(std::string_view xml, std::string source) {
  std::istringstream in{std::string(xml)};
  return xml_to_bp(in, std::move(source));
}

BpDocument parse_bp_text(std::istream& in, std::string source, bool allow_forest) {
  BpDocument doc;
  doc.source = std::move(source);
  std::int64_t run = 0;
  bool touched_zero = false;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '(') {
      doc.seq.push_back(true);
      ++run;
    } else if (c == ')') {
      doc.seq.push_back(false);
      if (--run < 0) fail(Errc::unbalanced, doc.source + ": close with no matching open");
      if (run == 0) {
        if (touched_zero && !allow_forest)
          fail(Errc::unbalanced, doc.source + ": forest input but a single tree was required");
        touched_zero = true;
      }
    } else if (!std::isspace(c)) {
      fail(Errc::bad_char,
           doc.source + ": unexpected character '" + std::string(1, char(c)) + "'");
    }
  }
  if (run != 0) fail(Errc::unbalanced, doc.source + ": " + std::to_string(run) + " unclosed open(s)");
  return doc;
}

BpDocument parse_bp_text_string(std::string_view text, std::string source, bool allow_forest) {
  std::istringstream in{std::string(text)};
  return parse_bp_text(in, std::move(source), allow_forest);
}

BpDocument parse_bp_packed(std::istream& in, std::string source) {
  BpDocument doc;
  doc.source = std::move(source);
  std::uint64_t n = 0;
  for (int k = 0; k < 8; ++k) {
    int c = in.get();
    if (c == EOF) fail(Errc::input_error, doc.source + ": truncated packed header");
    n |= std::uint64_t(std::uint8_t(c)) << (8 * k);
  }
  std::uint64_t nbytes = (n + 7) / 8;
  for (std::uint64_t b = 0; b < nbytes; ++b) {
    int c = in.get();
    if (c == EOF) fail(Errc::input_error, doc.source + ": truncated packed payload");
    std::uint8_t byte = std::uint8_t(c);
    std::uint64_t take = std::min<std::uint64_t>(8, n - b * 8);
    for (std::uint64_t k = 0; k < take; ++k)
      doc.seq.push_back((byte >> (7 - k)) & 1u);  // MSB-first
    if (take < 8 && (byte & ((1u << (8 - take)) - 1)))
      fail(Errc::input_error, doc.source + ": nonzero padding in final packed byte");
  }
  if (in.get() != EOF) fail(Errc::input_error, doc.source + ": trailing bytes after packed payload");
  if (!doc.seq.is_balanced()) fail(Errc::unbalanced, doc.source + ": packed sequence unbalanced");
  return doc;
}

void serialize_bp(const ParenSeq& seq, BpFormat fmt, std::ostream& out) {
  if (fmt == BpFormat::text) {
    for (std::uint64_t i = 0; i < seq.size(); ++i) out.put(seq.open_at(i) ? '(' : ')');
    out.put('\n');
    return;
  }
  std::uint64_t n = seq.size();
  for (int k = 0; k < 8; ++k) out.put(char((n >> (8 * k)) & 0xFF));
  std::uint8_t byte = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (seq.open_at(i)) byte |= std::uint8_t(1u << (7 - (i & 7)));
    if ((i & 7) == 7) {
      out.put(char(byte));
      byte = 0;
    }
  }
  if (n & 7) out.put(char(byte));
}

BpDocument random_balanced(std::uint64_t nodes, std::uint64_t seed) {
  BpDocument doc;
  doc.source = "random(" + std::to_string(nodes) + ", seed " + std::to_string(seed) + ")";
  if (nodes == 0) return doc;

  // n opens and n+1 closes, shuffled, then rotated just past the first
  // prefix-sum minimum: the cycle lemma gives exactly one rotation of the
  // form D ')' with D balanced, and the map is a bijection, so D is uniform.
  std::uint64_t total = 2 * nodes + 1;
  std::vector<std::uint8_t> w(total, 0);
  for (std::uint64_t i = 0; i < nodes; ++i) w[i] = 1;
  std::mt19937_64 rng(seed);
  for (std::uint64_t i = total - 1; i > 0; --i) {
    std::uint64_t j = rng() % (i + 1);  // modulo keeps the stream portable
    std::swap(w[i], w[j]);
  }
  std::int64_t run = 0, best = 1;
  std::uint64_t best_at = 0;
  for (std::uint64_t i = 0; i < total; ++i) {
    run += w[i] ? 1 : -1;
    if (run < best) {
      best = run;
      best_at = i;
    }
  }
  for (std::uint64_t k = 1; k < total; ++k)
    doc.seq.push_back(w[(best_at + k) % total] != 0);
  return doc;
}

BpDocument load_path(const std::string& path) {
  auto has_suffix = [&](std::string_view sfx) {
    return path.size() >= sfx.size() &&
           path.compare(path.size() - sfx.size(), sfx.size(), sfx) == 0;
  };
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::input_error, path + ": cannot open");
  if (has_suffix(".xml")) return xml_to_bp(in, path);
  if (has_suffix(".bp") || has_suffix(".txt")) return parse_bp_text(in, path);
  if (has_suffix(".pbp") || has_suffix(".packed") || has_suffix(".bin"))
    return parse_bp_packed(in, path);
  // sniff the first non-whitespace byte
  int c;
  while ((c = in.peek()) != EOF && std::isspace(c)) in.get();
  if (c == '<') return xml_to_bp(in, path);
  if (c == '(' || c == ')') return parse_bp_text(in, path);
  in.clear();
  in.seekg(0);
  return parse_bp_packed(in, path);
}

}  // namespace rmmt::ingest
