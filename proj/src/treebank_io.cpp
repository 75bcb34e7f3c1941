#include "slparse/treebank_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace slparse {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
}

struct BracketLexer {
    std::string_view text;
    std::size_t pos = 0;
    std::size_t line = 1;
    std::size_t col = 1;

    void advance() {
        if (text[pos] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        ++pos;
    }

    void skip_space() {
        while (pos < text.size() && is_space(text[pos])) advance();
    }

    bool eof() {
        skip_space();
        return pos >= text.size();
    }

    char peek() const { return text[pos]; }

    std::string next_word() {
        std::string out;
        while (pos < text.size() && !is_space(text[pos]) && text[pos] != '(' &&
               text[pos] != ')') {
            out.push_back(text[pos]);
            advance();
        }
        return out;
    }
};

ConstNode parse_node(BracketLexer& lex) {
    // caller guarantees current char is '('
    const std::size_t open_line = lex.line, open_col = lex.col;
    lex.advance();
    lex.skip_space();

    ConstNode node;
    if (lex.pos < lex.text.size() && lex.peek() != '(' && lex.peek() != ')')
        node.label = lex.next_word();

    std::vector<std::string> words;
    while (true) {
        lex.skip_space();
        if (lex.pos >= lex.text.size())
            throw ParseError("unbalanced parentheses: '(' never closed",
                             open_line, open_col);
        if (lex.peek() == ')') {
            lex.advance();
            break;
        }
        if (lex.peek() == '(') {
            node.children.push_back(parse_node(lex));
        } else {
            words.push_back(lex.next_word());
        }
    }

    if (words.empty() && node.children.empty())
        throw ParseError("empty tree node", open_line, open_col);
    if (!words.empty()) {
        if (!node.children.empty() || words.size() > 1)
            throw ParseError("preterminal must contain exactly one word",
                             open_line, open_col);
        if (node.label.empty())
            throw ParseError("preterminal with empty tag", open_line, open_col);
        node.form = words[0];
    }
    return node;
}

void write_node(const ConstNode& node, std::string& out) {
    out.push_back('(');
    out += node.label;
    if (node.is_leaf()) {
        out.push_back(' ');
        out += node.form;
    } else {
        for (const ConstNode& child : node.children) {
            out.push_back(' ');
            write_node(child, out);
        }
    }
    out.push_back(')');
}

std::vector<std::string> split_tabs(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == '\t') {
            fields.emplace_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return fields;
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

int parse_int_field(const std::string& field, const char* what,
                    std::size_t line_no) {
    int value = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw ParseError(std::string("non-integer ") + what + " '" + field + "'",
                         line_no);
    return value;
}

}  // namespace

std::vector<ConstTree> read_bracketed(std::string_view text,
                                      const BracketReadOptions& opts) {
    BracketLexer lex{text};
    std::vector<ConstTree> trees;
    while (!lex.eof()) {
        if (lex.peek() != '(')
            throw ParseError("expected '(' at top level", lex.line, lex.col);
        ConstNode root = parse_node(lex);

        if (root.is_leaf()) {
            trees.push_back(ConstTree{std::move(root)});
            continue;
        }
        const bool wrapper =
            std::find(opts.wrapper_labels.begin(), opts.wrapper_labels.end(),
                      root.label) != opts.wrapper_labels.end();
        if (wrapper && root.children.size() == 1 && opts.strip_wrapper) {
            root = std::move(root.children[0]);
        } else if (root.label.empty()) {
            root.label = opts.root_label;
        }
        trees.push_back(ConstTree{std::move(root)});
    }
    return trees;
}

std::string write_bracketed(const ConstTree& tree,
                            const BracketWriteOptions& opts) {
    std::string out;
    if (opts.add_wrapper) {
        out.push_back('(');
        out += opts.wrapper_label;
        out.push_back(' ');
        write_node(tree.root, out);
        out.push_back(')');
    } else {
        write_node(tree.root, out);
    }
    return out;
}

ConllReadResult read_conll(std::string_view text, const ConllColumns& cols) {
    ConllReadResult result;
    ConllSentence current;
    std::size_t line_no = 0;
    std::size_t sentence_index = 0;
    std::size_t sentence_start_line = 0;
    std::vector<std::size_t> start_lines;

    const int max_col =
        std::max({cols.id, cols.form, cols.pos, cols.head, cols.deprel});

    auto flush = [&] {
        if (current.tokens.empty()) return;
        for (const std::string& issue : validate(current.tree))
            result.warnings.push_back("sentence " +
                                      std::to_string(sentence_index + 1) + ": " +
                                      issue);
        result.sentences.push_back(std::move(current));
        start_lines.push_back(sentence_start_line);
        current = ConllSentence{};
        ++sentence_index;
    };

    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = strip_cr(text.substr(start, end - start));
        ++line_no;
        start = end + 1;
        if (start > text.size() && line.empty()) break;

        if (line.empty()) {
            flush();
            continue;
        }
        if (line[0] == '#') continue;

        std::vector<std::string> fields = split_tabs(line);
        if (static_cast<int>(fields.size()) < max_col)
            throw ParseError("expected at least " + std::to_string(max_col) +
                                 " tab-separated columns, got " +
                                 std::to_string(fields.size()),
                             line_no);

        const int id = parse_int_field(fields[cols.id - 1], "ID", line_no);
        if (id != static_cast<int>(current.tokens.size()) + 1)
            throw ParseError("ID out of sequence: expected " +
                                 std::to_string(current.tokens.size() + 1) +
                                 ", got " + std::to_string(id),
                             line_no);
        if (current.tokens.empty()) sentence_start_line = line_no;
        const int head = parse_int_field(fields[cols.head - 1], "HEAD", line_no);
        if (fields[cols.form - 1].empty() || fields[cols.pos - 1].empty())
            throw ParseError("empty FORM or POS field", line_no);

        current.tokens.push_back(
            Token{fields[cols.form - 1], fields[cols.pos - 1]});
        current.tree.heads.push_back(head);
        current.tree.rels.push_back(fields[cols.deprel - 1]);
    }
    flush();

    // HEAD range can only be checked once the sentence length is known.
    for (std::size_t s = 0; s < result.sentences.size(); ++s) {
        for (int h : result.sentences[s].tree.heads)
            if (h < 0 ||
                h > static_cast<int>(result.sentences[s].tokens.size()))
                throw ParseError("HEAD out of range in sentence " +
                                     std::to_string(s + 1),
                                 start_lines[s]);
    }
    return result;
}

std::string write_conll(const Sentence& sentence, const DepTree& tree,
                        const ConllColumns& cols) {
    const int ncols =
        std::max({cols.id, cols.form, cols.pos, cols.head, cols.deprel, 10});
    std::string out;
    for (std::size_t i = 0; i < sentence.size(); ++i) {
        std::vector<std::string> fields(ncols, "_");
        fields[cols.id - 1] = std::to_string(i + 1);
        fields[cols.form - 1] = sentence[i].form;
        fields[cols.pos - 1] = sentence[i].pos;
        fields[cols.head - 1] = std::to_string(tree.heads[i]);
        fields[cols.deprel - 1] = tree.rels[i];
        for (int c = 0; c < ncols; ++c) {
            if (c) out.push_back('\t');
            out += fields[c];
        }
        out.push_back('\n');
    }
    return out;
}

std::string write_conll_file(const std::vector<ConllSentence>& sentences,
                             const ConllColumns& cols) {
    std::string out;
    for (const ConllSentence& s : sentences) {
        out += write_conll(s.tokens, s.tree, cols);
        out.push_back('\n');
    }
    return out;
}

std::vector<LabeledSentence> read_labels(std::string_view text) {
    std::vector<LabeledSentence> sentences;
    LabeledSentence current;
    std::size_t line_no = 0;
    std::size_t ncols = 0;  // label columns; fixed by the first token row
    bool ncols_known = false;

    auto flush = [&] {
        if (current.tokens.empty()) return;
        sentences.push_back(std::move(current));
        current = LabeledSentence{};
        if (ncols_known) current.labels.resize(ncols);
    };

    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = strip_cr(text.substr(start, end - start));
        ++line_no;
        start = end + 1;
        if (start > text.size() && line.empty()) break;

        if (line.empty()) {
            flush();
            continue;
        }
        std::vector<std::string> fields = split_tabs(line);
        if (fields.size() < 3)
            throw ParseError(
                "expected form<TAB>pos<TAB>label..., got " +
                    std::to_string(fields.size()) + " fields",
                line_no);
        if (!ncols_known) {
            ncols = fields.size() - 2;
            ncols_known = true;
            current.labels.resize(ncols);
        } else if (fields.size() - 2 != ncols) {
            throw ParseError("ragged row: expected " + std::to_string(ncols) +
                                 " label columns, got " +
                                 std::to_string(fields.size() - 2),
                             line_no);
        }
        if (fields[0].empty() || fields[1].empty())
            throw ParseError("empty form or pos field", line_no);
        current.tokens.push_back(Token{fields[0], fields[1]});
        for (std::size_t c = 0; c < ncols; ++c)
            current.labels[c].push_back(fields[2 + c]);
    }
    flush();
    return sentences;
}

std::vector<Sentence> read_tagged_sentences(std::string_view text) {
    std::vector<Sentence> sentences;
    Sentence current;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = strip_cr(text.substr(start, end - start));
        ++line_no;
        start = end + 1;
        if (start > text.size() && line.empty()) break;

        if (line.empty()) {
            if (!current.empty()) {
                sentences.push_back(std::move(current));
                current.clear();
            }
            continue;
        }
        std::vector<std::string> fields = split_tabs(line);
        if (fields.size() < 2 || fields[0].empty() || fields[1].empty())
            throw ParseError("expected form<TAB>pos", line_no);
        current.push_back(Token{fields[0], fields[1]});
    }
    if (!current.empty()) sentences.push_back(std::move(current));
    return sentences;
}

std::string write_labels(const std::vector<LabeledSentence>& sentences) {
    std::string out;
    for (const LabeledSentence& s : sentences) {
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
            out += s.tokens[i].form;
            out.push_back('\t');
            out += s.tokens[i].pos;
            for (const auto& column : s.labels) {
                out.push_back('\t');
                out += column[i];
            }
            out.push_back('\n');
        }
        out.push_back('\n');
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace slparse
