#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "textae/error.hpp"
#include "textae/matrix.hpp"
#include "textae/rng.hpp"

namespace textae {

struct Document {
    std::string id;
    std::string text;
    int label = 0;  // binary class, 0 = negative, 1 = positive
};

struct Vocabulary {
    std::vector<std::string> terms;  // lexicographically sorted n-grams
    std::unordered_map<std::string, std::size_t> term_to_index;
    int ngram_min = 1;
    int ngram_max = 2;
};

namespace detail {

// Code points treated as word characters: ASCII alphanumerics plus the
// Latin-1 / Latin Extended letter blocks (French clinical text keeps its
// accents). Multiplication and division signs are excluded.
inline bool is_word_cp(char32_t cp) {
    if (cp < 0x80)
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    return cp >= 0xC0 && cp <= 0x24F && cp != 0xD7 && cp != 0xF7;
}

inline char32_t fold_cp(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    if (cp >= 0x100 && cp <= 0x137 && (cp % 2) == 0) return cp + 1;
    if (cp >= 0x139 && cp <= 0x148 && (cp % 2) == 1) return cp + 1;
    if (cp >= 0x14A && cp <= 0x177 && (cp % 2) == 0) return cp + 1;
    if (cp == 0x178) return 0xFF;
    if (cp >= 0x179 && cp <= 0x17E && (cp % 2) == 1) return cp + 1;
    return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Decodes the next UTF-8 code point; malformed bytes come back as U+FFFD
// (a separator) so tokenization stays deterministic on any input.
inline char32_t next_cp(std::string_view s, std::size_t& i) {
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    const unsigned char b0 = byte(i);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    auto cont = [&](std::size_t k) { return k < s.size() && (byte(k) & 0xC0) == 0x80; };
    if ((b0 & 0xE0) == 0xC0 && cont(i + 1)) {
        const char32_t cp = ((b0 & 0x1F) << 6) | (byte(i + 1) & 0x3F);
        i += 2;
        return cp;
    }
    if ((b0 & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2)) {
        const char32_t cp = ((b0 & 0x0F) << 12) | ((byte(i + 1) & 0x3F) << 6) | (byte(i + 2) & 0x3F);
        i += 3;
        return cp;
    }
    if ((b0 & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
        const char32_t cp = ((b0 & 0x07) << 18) | ((byte(i + 1) & 0x3F) << 12) |
                            ((byte(i + 2) & 0x3F) << 6) | (byte(i + 3) & 0x3F);
        i += 4;
        return cp;
    }
    ++i;
    return 0xFFFD;
}

}  // namespace detail

// Lowercased word tokens on Unicode letter/digit boundaries. Apostrophes
// (U+0027 and U+2019) split, so "l'insuffisance" -> ["l", "insuffisance"].
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    std::size_t i = 0;
    while (i < text.size()) {
        const char32_t cp = detail::next_cp(text, i);
        if (detail::is_word_cp(cp)) {
            detail::append_utf8(cur, detail::fold_cp(cp));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

struct CountResult {
    Vocabulary vocab;
    SparseMatrix counts;     // (n_docs x n_terms), entry = term count
    std::vector<int> labels;
};

// Document-term count matrix over the n-gram vocabulary of the given corpus.
// N-grams are space-joined token runs; the vocabulary is sorted
// lexicographically so the column order is deterministic.
inline CountResult build_counts(const std::vector<Document>& docs, int ngram_min, int ngram_max) {
    if (docs.empty()) throw DomainError("build_counts: empty document list");
    if (ngram_min < 1 || ngram_max < ngram_min) throw DomainError("build_counts: bad ngram range");

    std::vector<std::map<std::string, double>> doc_counts(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        if (docs[d].label != 0 && docs[d].label != 1)
            throw DomainError("build_counts: label must be 0 or 1");
        const auto toks = tokenize(docs[d].text);
        auto& counts = doc_counts[d];
        for (int n = ngram_min; n <= ngram_max; ++n) {
            if (toks.size() < static_cast<std::size_t>(n)) break;
            for (std::size_t s = 0; s + n <= toks.size(); ++s) {
                std::string gram = toks[s];
                for (int j = 1; j < n; ++j) {
                    gram += ' ';
                    gram += toks[s + j];
                }
                counts[std::move(gram)] += 1.0;
            }
        }
    }

    CountResult out;
    out.vocab.ngram_min = ngram_min;
    out.vocab.ngram_max = ngram_max;
    {
        std::map<std::string, std::size_t> order;
        for (const auto& counts : doc_counts)
            for (const auto& [term, c] : counts) order.emplace(term, 0);
        out.vocab.terms.reserve(order.size());
        for (auto& [term, idx] : order) {
            idx = out.vocab.terms.size();
            out.vocab.terms.push_back(term);
        }
        out.vocab.term_to_index.reserve(order.size());
        for (const auto& [term, idx] : order) out.vocab.term_to_index.emplace(term, idx);

        out.counts = SparseMatrix(docs.size(), out.vocab.terms.size());
        for (std::size_t d = 0; d < docs.size(); ++d) {
            for (const auto& [term, c] : doc_counts[d]) {
                out.counts.col_indices.push_back(order.at(term));
                out.counts.values.push_back(c);
            }
            out.counts.row_offsets[d + 1] = out.counts.values.size();
        }
    }
    out.labels.reserve(docs.size());
    for (const auto& d : docs) out.labels.push_back(d.label);
    return out;
}

// Counts for held-out documents against an already-built vocabulary;
// unseen terms are dropped.
inline SparseMatrix count_with_vocab(const std::vector<Document>& docs, const Vocabulary& vocab) {
    SparseMatrix m(docs.size(), vocab.terms.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        const auto toks = tokenize(docs[d].text);
        std::map<std::size_t, double> row;
        for (int n = vocab.ngram_min; n <= vocab.ngram_max; ++n) {
            if (toks.size() < static_cast<std::size_t>(n)) break;
            for (std::size_t s = 0; s + n <= toks.size(); ++s) {
                std::string gram = toks[s];
                for (int j = 1; j < n; ++j) {
                    gram += ' ';
                    gram += toks[s + j];
                }
                const auto it = vocab.term_to_index.find(gram);
                if (it != vocab.term_to_index.end()) row[it->second] += 1.0;
            }
        }
        for (const auto& [col, c] : row) {
            m.col_indices.push_back(col);
            m.values.push_back(c);
        }
        m.row_offsets[d + 1] = m.values.size();
    }
    return m;
}

struct SynthParams {
    std::uint64_t seed = 0;
    std::size_t n_docs = 1000;
    std::size_t vocab_size = 500;
    double class_balance = 0.36;  // positive-class prevalence
    bool nonlinearity = false;
};

// Deterministic synthetic corpus with two class-conditional term
// distributions.
//
// nonlinearity off: the two classes use disjoint halves of the marker pool,
// so raw term counts are linearly separable.
//
// nonlinearity on: each document draws its markers from one latent cluster;
// every marker term belongs to exactly one positive and one negative
// cluster, so per-term marginals are class-balanced and only co-occurrence
// patterns (which markers appear together) carry the class.
inline std::vector<Document> synth_corpus(const SynthParams& p) {
    if (!(p.class_balance > 0.0 && p.class_balance < 1.0))
        throw DomainError("synth_corpus: class_balance must be in (0,1)");
    if (p.vocab_size < 20) throw DomainError("synth_corpus: vocab_size must be >= 20");
    if (p.n_docs == 0) throw DomainError("synth_corpus: n_docs must be positive");

    Rng rng(derive_seed(p.seed, "synth"));

    const std::size_t n_marker = p.vocab_size * 2 / 5;
    const std::size_t n_background = p.vocab_size - n_marker;

    int width = 3;
    for (std::size_t v = p.vocab_size - 1; v >= 1000; v /= 10) ++width;
    const auto term_name = [&](std::size_t k) {
        std::string s = std::to_string(k);
        return "w" + std::string(width - s.size(), '0') + s;
    };

    // background terms follow a fixed Zipf-like law
    std::vector<double> bg_cdf(n_background);
    {
        double acc = 0.0;
        for (std::size_t k = 0; k < n_background; ++k) {
            acc += 1.0 / std::pow(static_cast<double>(k + 1), 0.9);
            bg_cdf[k] = acc;
        }
        for (double& v : bg_cdf) v /= acc;
    }
    const auto sample_background = [&]() {
        const double u = rng.uniform();
        const auto it = std::lower_bound(bg_cdf.begin(), bg_cdf.end(), u);
        return n_marker + static_cast<std::size_t>(it - bg_cdf.begin());
    };

    // latent clusters over the marker pool (used when nonlinearity is on)
    const std::size_t clusters_per_class =
        std::clamp<std::size_t>(n_marker / 20, 2, 24);
    std::vector<std::vector<std::size_t>> neg_clusters(clusters_per_class);
    std::vector<std::vector<std::size_t>> pos_clusters(clusters_per_class);
    {
        std::vector<std::size_t> pool(n_marker);
        for (std::size_t i = 0; i < n_marker; ++i) pool[i] = i;
        rng.shuffle(pool);
        for (std::size_t i = 0; i < n_marker; ++i)
            neg_clusters[i % clusters_per_class].push_back(pool[i]);
        for (int attempt = 0; attempt < 16; ++attempt) {
            rng.shuffle(pool);
            for (auto& c : pos_clusters) c.clear();
            for (std::size_t i = 0; i < n_marker; ++i)
                pos_clusters[i % clusters_per_class].push_back(pool[i]);
            bool collision = false;
            for (auto& c : pos_clusters) {
                auto sorted = c;
                std::sort(sorted.begin(), sorted.end());
                for (auto& n : neg_clusters) {
                    auto nsorted = n;
                    std::sort(nsorted.begin(), nsorted.end());
                    if (sorted == nsorted) collision = true;
                }
            }
            if (!collision) break;
        }
    }

    const double marker_frac = 0.55;
    std::vector<Document> docs;
    docs.reserve(p.n_docs);
    for (std::size_t d = 0; d < p.n_docs; ++d) {
        Document doc;
        {
            std::string s = std::to_string(d);
            doc.id = "d" + std::string(s.size() < 6 ? 6 - s.size() : 0, '0') + s;
        }
        doc.label = rng.uniform() < p.class_balance ? 1 : 0;
        const std::size_t len = 25 + rng.below(31);

        const std::vector<std::size_t>* cluster = nullptr;
        if (p.nonlinearity) {
            const auto& side = doc.label ? pos_clusters : neg_clusters;
            cluster = &side[rng.below(clusters_per_class)];
        }
        std::string text;
        for (std::size_t t = 0; t < len; ++t) {
            std::size_t term;
            if (rng.uniform() < marker_frac) {
                if (p.nonlinearity) {
                    term = (*cluster)[rng.below(cluster->size())];
                } else {
                    const std::size_t half = n_marker / 2;
                    term = doc.label ? rng.below(half) : half + rng.below(n_marker - half);
                }
            } else {
                term = sample_background();
            }
            if (!text.empty()) text += ' ';
            text += term_name(term);
        }
        doc.text = std::move(text);
        docs.push_back(std::move(doc));
    }
    return docs;
}

// ---- CSV corpus files: header `id,text,label`, RFC-4180 quoting ----

namespace detail {

inline void write_csv_field(std::ostream& os, std::string_view f) {
    if (f.find_first_of(",\"\r\n") == std::string_view::npos) {
        os << f;
        return;
    }
    os << '"';
    for (char c : f) {
        if (c == '"') os << '"';
        os << c;
    }
    os << '"';
}

// One CSV record (may span physical lines inside quoted fields). Returns
// false on end of input.
inline bool read_csv_record(std::istream& is, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    int c;
    while ((c = is.get()) != EOF) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (is.peek() == '"') {
                    field.push_back('"');
                    is.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(static_cast<char>(c));
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\r') {
            if (is.peek() == '\n') is.get();
            fields.push_back(std::move(field));
            return true;
        } else if (c == '\n') {
            fields.push_back(std::move(field));
            return true;
        } else {
            field.push_back(static_cast<char>(c));
        }
    }
    if (!any) return false;
    if (in_quotes) throw DataError("csv: unterminated quoted field");
    fields.push_back(std::move(field));
    return true;
}

}  // namespace detail

inline void write_corpus_csv(std::ostream& os, const std::vector<Document>& docs) {
    os << "id,text,label\n";
    for (const auto& d : docs) {
        detail::write_csv_field(os, d.id);
        os << ',';
        detail::write_csv_field(os, d.text);
        os << ',' << d.label << '\n';
    }
}

inline std::vector<Document> read_corpus_csv(std::istream& is) {
    std::vector<std::string> fields;
    if (!detail::read_csv_record(is, fields) || fields.size() != 3 || fields[0] != "id" ||
        fields[1] != "text" || fields[2] != "label")
        throw DataError("csv: expected header id,text,label");
    std::vector<Document> docs;
    while (detail::read_csv_record(is, fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue;  // trailing newline
        if (fields.size() != 3) throw DataError("csv: record does not have 3 fields");
        Document d;
        d.id = fields[0];
        d.text = fields[1];
        if (fields[2] == "0")
            d.label = 0;
        else if (fields[2] == "1")
            d.label = 1;
        else
            throw DataError("csv: label must be 0 or 1, got '" + fields[2] + "'");
        docs.push_back(std::move(d));
    }
    return docs;
}

inline void save_vocabulary(std::ostream& os, const Vocabulary& v) {
    for (const auto& t : v.terms) os << t << '\n';
}

}  // namespace textae
