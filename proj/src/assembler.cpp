#include "dicelab/assembler.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <vector>

#include "dicelab/isa.hpp"

namespace dicelab::fw {

namespace {

using isa::Instr;
using isa::Op;

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

std::string strip(std::string_view v) {
    size_t b = v.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return "";
    size_t e = v.find_last_not_of(" \t\r");
    return std::string(v.substr(b, e - b + 1));
}

struct Parser {
    const SymbolTable& externs;
    const SymbolTable& labels;
    int line;

    [[noreturn]] void fail(const std::string& msg) const { throw AsmError(line, msg); }

    uint32_t lookup(const std::string& name) const {
        if (auto it = labels.find(name); it != labels.end()) return it->second;
        if (auto it = externs.find(name); it != externs.end()) return it->second;
        fail("unknown symbol '" + name + "'");
    }

    // expr := term (('+'|'-') term)* ; term := number | symbol | lo(expr) | hi(expr)
    int64_t eval(std::string_view text) const {
        size_t pos = 0;
        int64_t value = eval_term(text, pos);
        while (pos < text.size()) {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) pos++;
            if (pos >= text.size()) break;
            char op = text[pos];
            if (op != '+' && op != '-') fail("bad expression near '" + std::string(text.substr(pos)) + "'");
            pos++;
            int64_t rhs = eval_term(text, pos);
            value = op == '+' ? value + rhs : value - rhs;
        }
        return value;
    }

    int64_t eval_term(std::string_view text, size_t& pos) const {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) pos++;
        if (pos >= text.size()) fail("expected expression");
        if (text[pos] == '-') {
            pos++;
            return -eval_term(text, pos);
        }
        size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_' ||
                text[pos] == 'x' || text[pos] == 'X'))
            pos++;
        std::string tok(text.substr(start, pos - start));
        if (tok.empty()) fail("expected expression");
        std::string ltok = lower(tok);
        if ((ltok == "lo" || ltok == "hi") && pos < text.size() && text[pos] == '(') {
            size_t depth = 1, open = ++pos;
            while (pos < text.size() && depth) {
                if (text[pos] == '(') depth++;
                if (text[pos] == ')') depth--;
                pos++;
            }
            if (depth) fail("unterminated " + ltok + "()");
            int64_t inner = eval(text.substr(open, pos - 1 - open));
            return ltok == "lo" ? (inner & 0xFFFF) : ((inner >> 16) & 0xFFFF);
        }
        if (std::isdigit(static_cast<unsigned char>(tok[0]))) {
            try {
                return static_cast<int64_t>(std::stoll(tok, nullptr, 0));
            } catch (...) {
                fail("bad number '" + tok + "'");
            }
        }
        return lookup(tok);
    }

    uint8_t parse_reg(std::string_view text) const {
        std::string t = lower(strip(text));
        if (t == "sp") return isa::kRegSp;
        if (t == "lr") return isa::kRegLr;
        if (t == "pc") return isa::kRegPc;
        if (t.size() >= 2 && t[0] == 'r') {
            int n = -1;
            try {
                n = std::stoi(t.substr(1));
            } catch (...) {
            }
            if (n >= 0 && n <= 12) return static_cast<uint8_t>(n);
        }
        fail("bad register '" + std::string(text) + "'");
    }

    uint16_t parse_regmask(std::string_view text) const {
        std::string t = strip(text);
        if (t.size() < 2 || t.front() != '{' || t.back() != '}') fail("expected {reg list}");
        t = t.substr(1, t.size() - 2);
        uint16_t mask = 0;
        std::stringstream ss(t);
        std::string item;
        while (std::getline(ss, item, ',')) mask |= 1u << parse_reg(item);
        if (mask == 0) fail("empty register list");
        return mask;
    }

    uint16_t parse_imm16(std::string_view text, bool allow_signed) const {
        std::string t = strip(text);
        if (!t.empty() && t[0] == '#') t = t.substr(1);
        int64_t v = eval(t);
        if (allow_signed) {
            if (v < -32768 || v > 32767) fail("immediate out of signed 16-bit range");
            return static_cast<uint16_t>(static_cast<int16_t>(v));
        }
        if (v < 0 || v > 0xFFFF) fail("immediate out of 16-bit range");
        return static_cast<uint16_t>(v);
    }

    // "[rn]" or "[rn, #0]"
    uint8_t parse_mem(std::string_view text) const {
        std::string t = strip(text);
        if (t.size() < 2 || t.front() != '[' || t.back() != ']') fail("expected [reg]");
        t = t.substr(1, t.size() - 2);
        if (size_t c = t.find(','); c != std::string::npos) {
            std::string off = strip(t.substr(c + 1));
            if (off != "#0") fail("only #0 offsets are supported");
            t = t.substr(0, c);
        }
        return parse_reg(t);
    }
};

std::vector<std::string> split_args(std::string_view text) {
    // Split on top-level commas ({...} and [...] group).
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char c : text) {
        if (c == '{' || c == '[' || c == '(') depth++;
        if (c == '}' || c == ']' || c == ')') depth--;
        if (c == ',' && depth == 0) {
            out.push_back(strip(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    std::string last = strip(cur);
    if (!last.empty()) out.push_back(last);
    return out;
}

struct Stmt {
    int line;
    uint32_t addr;
    std::string mnemonic;  // lowered; empty for pure data
    std::vector<std::string> args;
    bool is_word = false;
    bool is_space = false;
    uint32_t space_len = 0;
    uint8_t space_fill = 0xFF;
};

}  // namespace

Assembled assemble(std::string_view source, uint32_t base, const SymbolTable& externs) {
    Assembled out;
    std::vector<Stmt> stmts;
    uint32_t pc = base;

    // Pass 1: layout and label collection.
    int lineno = 0;
    size_t pos = 0;
    while (pos <= source.size()) {
        size_t eol = source.find('\n', pos);
        std::string_view raw = source.substr(pos, eol == std::string_view::npos ? source.size() - pos
                                                                                : eol - pos);
        pos = eol == std::string_view::npos ? source.size() + 1 : eol + 1;
        lineno++;
        std::string text(raw);
        if (size_t cmt = text.find(';'); cmt != std::string::npos) text = text.substr(0, cmt);
        text = strip(text);

        while (!text.empty()) {
            size_t colon = text.find(':');
            size_t sp = text.find_first_of(" \t{[#");
            if (colon != std::string::npos && (sp == std::string::npos || colon < sp)) {
                std::string label = strip(text.substr(0, colon));
                if (label.empty()) throw AsmError(lineno, "empty label");
                if (out.labels.count(label)) throw AsmError(lineno, "duplicate label '" + label + "'");
                out.labels[label] = pc;
                text = strip(text.substr(colon + 1));
                continue;
            }
            break;
        }
        if (text.empty()) continue;

        Stmt st;
        st.line = lineno;
        size_t sp = text.find_first_of(" \t");
        st.mnemonic = lower(sp == std::string::npos ? text : text.substr(0, sp));
        std::string rest = sp == std::string::npos ? "" : strip(text.substr(sp));
        st.args = split_args(rest);

        Parser p1{externs, out.labels, lineno};
        if (st.mnemonic == ".org") {
            if (st.args.size() != 1) throw AsmError(lineno, ".org needs one address");
            int64_t target = p1.eval(st.args[0]);
            if (target < pc) throw AsmError(lineno, ".org moves backwards");
            st.is_space = true;
            st.space_len = static_cast<uint32_t>(target - pc);
            st.addr = pc;
            pc = static_cast<uint32_t>(target);
            stmts.push_back(st);
            continue;
        }
        if (st.mnemonic == ".space") {
            if (st.args.empty() || st.args.size() > 2) throw AsmError(lineno, ".space needs 1-2 args");
            st.is_space = true;
            st.space_len = static_cast<uint32_t>(p1.eval(st.args[0]));
            if (st.args.size() == 2) st.space_fill = static_cast<uint8_t>(p1.eval(st.args[1]));
            st.addr = pc;
            pc += st.space_len;
            stmts.push_back(st);
            continue;
        }
        if (st.mnemonic == ".word") {
            if (st.args.empty()) throw AsmError(lineno, ".word needs a value");
            st.is_word = true;
            st.addr = pc;
            pc += 4 * static_cast<uint32_t>(st.args.size());
            stmts.push_back(st);
            continue;
        }
        st.addr = pc;
        pc += 4;
        stmts.push_back(st);
    }

    // Pass 2: encode.
    out.bytes.reserve(pc - base);
    for (const Stmt& st : stmts) {
        Parser p{externs, out.labels, st.line};
        if (st.is_space) {
            out.bytes.insert(out.bytes.end(), st.space_len, st.space_fill);
            continue;
        }
        if (st.is_word) {
            for (const auto& a : st.args) put_u32le(out.bytes, static_cast<uint32_t>(p.eval(a)));
            continue;
        }

        Instr in;
        const auto& m = st.mnemonic;
        const auto& a = st.args;
        auto need = [&](size_t n) {
            if (a.size() != n) p.fail(m + " expects " + std::to_string(n) + " operand(s)");
        };
        auto branch_to = [&](Op op) {
            need(1);
            int64_t target = p.eval(a[0]);
            int64_t delta = target - (static_cast<int64_t>(st.addr) + 4);
            if (delta % 4) p.fail("branch target not word aligned");
            int64_t words = delta / 4;
            if (words < -(1 << 23) || words >= (1 << 23)) p.fail("branch out of range");
            in.op = op;
            in.off24 = static_cast<int32_t>(words);
        };

        if (m == "nop") { need(0); in.op = Op::Nop; }
        else if (m == "halt") { need(0); in.op = Op::Halt; }
        else if (m == "cpsid") { need(1); if (lower(a[0]) != "i") p.fail("expected 'cpsid i'"); in.op = Op::Cpsid; }
        else if (m == "cpsie") { need(1); if (lower(a[0]) != "i") p.fail("expected 'cpsie i'"); in.op = Op::Cpsie; }
        else if (m == "push") { need(1); in.op = Op::Push; in.regmask = p.parse_regmask(a[0]); }
        else if (m == "pop") { need(1); in.op = Op::Pop; in.regmask = p.parse_regmask(a[0]); }
        else if (m == "ldr" || m == "str") {
            need(2);
            in.op = m == "ldr" ? Op::Ldr : Op::Str;
            in.rd = p.parse_reg(a[0]);
            in.rn = p.parse_mem(a[1]);
        } else if (m == "movw" || m == "movt") {
            need(2);
            in.op = m == "movw" ? Op::Movw : Op::Movt;
            in.rd = p.parse_reg(a[0]);
            in.imm16 = p.parse_imm16(a[1], false);
        } else if (m == "add") {
            need(2);
            in.op = Op::Addi;
            in.rd = p.parse_reg(a[0]);
            in.imm16 = p.parse_imm16(a[1], true);
        } else if (m == "mov") {
            need(2);
            in.op = Op::Mov;
            in.rd = p.parse_reg(a[0]);
            in.rn = p.parse_reg(a[1]);
        } else if (m == "cmp") {
            need(2);
            in.rd = p.parse_reg(a[0]);
            if (!a[1].empty() && a[1][0] == '#') {
                in.op = Op::CmpImm;
                in.imm16 = p.parse_imm16(a[1], false);
            } else {
                in.op = Op::CmpReg;
                in.rn = p.parse_reg(a[1]);
            }
        } else if (m == "b") branch_to(Op::B);
        else if (m == "beq") branch_to(Op::Beq);
        else if (m == "bne") branch_to(Op::Bne);
        else if (m == "blo") branch_to(Op::Blo);
        else if (m == "bhs") branch_to(Op::Bhs);
        else if (m == "bl") branch_to(Op::Bl);
        else if (m == "bx") { need(1); in.op = Op::Bx; in.rd = p.parse_reg(a[0]); }
        else if (m == "dicecdi") { need(1); in.op = Op::DiceCdi; in.rd = p.parse_reg(a[0]); }
        else if (m == "diceid") { need(1); in.op = Op::DiceId; in.rd = p.parse_reg(a[0]); }
        else if (m == "sbveri") { need(1); in.op = Op::SbVerify; in.rd = p.parse_reg(a[0]); }
        else if (m == "sign") { need(1); in.op = Op::Sign; in.rd = p.parse_reg(a[0]); }
        else p.fail("unknown mnemonic '" + m + "'");

        uint32_t word = isa::encode(in);
        if (!isa::decode(word)) p.fail("instruction encodes to an invalid word");
        put_u32le(out.bytes, word);
    }
    return out;
}

}  // namespace dicelab::fw
