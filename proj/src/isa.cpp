#include "dicelab/isa.hpp"

#include <cstdio>

namespace dicelab::isa {

namespace {

constexpr uint32_t kOperandMask = 0x00FFFFFF;

bool valid_gpr(uint8_t r) { return r <= 12 || r == kRegLr; }          // no sp/pc
bool valid_dest(uint8_t r) { return r <= 12 || r == kRegSp || r == kRegLr; }

std::optional<Instr> reject() { return std::nullopt; }

}  // namespace

std::optional<Instr> decode(uint32_t word) {
    Instr in;
    uint8_t opbyte = static_cast<uint8_t>(word >> 24);
    uint32_t operands = word & kOperandMask;
    uint8_t f1 = static_cast<uint8_t>((word >> 20) & 0xF);
    uint8_t f2 = static_cast<uint8_t>((word >> 16) & 0xF);
    uint16_t imm = static_cast<uint16_t>(word & 0xFFFF);

    switch (opbyte) {
        case static_cast<uint8_t>(Op::Nop):
        case static_cast<uint8_t>(Op::Halt):
        case static_cast<uint8_t>(Op::Cpsid):
        case static_cast<uint8_t>(Op::Cpsie):
            if (operands != 0) return reject();
            in.op = static_cast<Op>(opbyte);
            return in;

        case static_cast<uint8_t>(Op::Push):
        case static_cast<uint8_t>(Op::Pop): {
            if ((operands >> 16) != 0) return reject();
            uint16_t mask = imm;
            if (mask == 0) return reject();
            if (mask & (1u << kRegSp)) return reject();
            if (opbyte == static_cast<uint8_t>(Op::Push) && (mask & (1u << kRegPc)))
                return reject();
            in.op = static_cast<Op>(opbyte);
            in.regmask = mask;
            return in;
        }

        case static_cast<uint8_t>(Op::Ldr):
        case static_cast<uint8_t>(Op::Str):
            if ((operands & 0x0FFFF) != 0) return reject();
            if (!valid_gpr(f1)) return reject();
            if (f2 == kRegPc) return reject();
            in.op = static_cast<Op>(opbyte);
            in.rd = f1;
            in.rn = f2;
            return in;

        case static_cast<uint8_t>(Op::Movw):
        case static_cast<uint8_t>(Op::Movt):
        case static_cast<uint8_t>(Op::Addi):
            if (!valid_dest(f1)) return reject();
            in.op = static_cast<Op>(opbyte);
            in.rd = f1;
            in.imm16 = imm;
            return in;

        case static_cast<uint8_t>(Op::Mov):
            if ((operands & 0x0FFFF) != 0) return reject();
            if (!valid_dest(f1) || f2 == kRegPc) return reject();
            in.op = Op::Mov;
            in.rd = f1;
            in.rn = f2;
            return in;

        case static_cast<uint8_t>(Op::CmpReg):
            if ((operands & 0x0FFFF) != 0) return reject();
            if (f1 == kRegPc || f2 == kRegPc) return reject();
            in.op = Op::CmpReg;
            in.rd = f1;
            in.rn = f2;
            return in;

        case static_cast<uint8_t>(Op::CmpImm):
            if (f1 == kRegPc) return reject();
            in.op = Op::CmpImm;
            in.rd = f1;
            in.imm16 = imm;
            return in;

        case static_cast<uint8_t>(Op::B):
        case static_cast<uint8_t>(Op::Beq):
        case static_cast<uint8_t>(Op::Bne):
        case static_cast<uint8_t>(Op::Blo):
        case static_cast<uint8_t>(Op::Bhs):
        case static_cast<uint8_t>(Op::Bl): {
            in.op = static_cast<Op>(opbyte);
            int32_t off = static_cast<int32_t>(operands);
            if (off & 0x00800000) off -= 0x01000000;  // sign-extend 24 bits
            in.off24 = off;
            return in;
        }

        case static_cast<uint8_t>(Op::Bx):
            if ((operands & 0x0FFFFF) != 0) return reject();
            if (f1 == kRegPc) return reject();
            in.op = Op::Bx;
            in.rd = f1;
            return in;

        case static_cast<uint8_t>(Op::DiceCdi):
        case static_cast<uint8_t>(Op::DiceId):
        case static_cast<uint8_t>(Op::SbVerify):
        case static_cast<uint8_t>(Op::Sign):
            if ((operands & 0x0FFFFF) != 0) return reject();
            if (!valid_gpr(f1)) return reject();
            in.op = static_cast<Op>(opbyte);
            in.rd = f1;
            return in;

        default:
            return reject();
    }
}

uint32_t encode(const Instr& in) {
    uint32_t op = static_cast<uint32_t>(in.op) << 24;
    switch (in.op) {
        case Op::Nop:
        case Op::Halt:
        case Op::Cpsid:
        case Op::Cpsie:
            return op;
        case Op::Push:
        case Op::Pop:
            return op | in.regmask;
        case Op::Ldr:
        case Op::Str:
        case Op::Mov:
        case Op::CmpReg:
            return op | static_cast<uint32_t>(in.rd) << 20 | static_cast<uint32_t>(in.rn) << 16;
        case Op::Movw:
        case Op::Movt:
        case Op::Addi:
        case Op::CmpImm:
            return op | static_cast<uint32_t>(in.rd) << 20 | in.imm16;
        case Op::B:
        case Op::Beq:
        case Op::Bne:
        case Op::Blo:
        case Op::Bhs:
        case Op::Bl:
            return op | (static_cast<uint32_t>(in.off24) & kOperandMask);
        case Op::Bx:
        case Op::DiceCdi:
        case Op::DiceId:
        case Op::SbVerify:
        case Op::Sign:
            return op | static_cast<uint32_t>(in.rd) << 20;
    }
    return op;
}

namespace {

std::string reg_name(uint8_t r) {
    if (r == kRegSp) return "sp";
    if (r == kRegLr) return "lr";
    if (r == kRegPc) return "pc";
    return "r" + std::to_string(r);
}

std::string mask_names(uint16_t mask) {
    std::string out = "{";
    bool first = true;
    for (uint8_t r = 0; r < 16; ++r) {
        if (!(mask & (1u << r))) continue;
        if (!first) out += ", ";
        out += reg_name(r);
        first = false;
    }
    return out + "}";
}

}  // namespace

std::string disassemble(const Instr& in) {
    char buf[64];
    switch (in.op) {
        case Op::Nop: return "nop";
        case Op::Halt: return "halt";
        case Op::Cpsid: return "cpsid i";
        case Op::Cpsie: return "cpsie i";
        case Op::Push: return "push " + mask_names(in.regmask);
        case Op::Pop: return "pop " + mask_names(in.regmask);
        case Op::Ldr: return "ldr " + reg_name(in.rd) + ", [" + reg_name(in.rn) + "]";
        case Op::Str: return "str " + reg_name(in.rd) + ", [" + reg_name(in.rn) + "]";
        case Op::Movw:
            std::snprintf(buf, sizeof buf, "movw %s, #0x%04x", reg_name(in.rd).c_str(), in.imm16);
            return buf;
        case Op::Movt:
            std::snprintf(buf, sizeof buf, "movt %s, #0x%04x", reg_name(in.rd).c_str(), in.imm16);
            return buf;
        case Op::Addi:
            std::snprintf(buf, sizeof buf, "add %s, #%d", reg_name(in.rd).c_str(),
                          static_cast<int16_t>(in.imm16));
            return buf;
        case Op::Mov: return "mov " + reg_name(in.rd) + ", " + reg_name(in.rn);
        case Op::CmpReg: return "cmp " + reg_name(in.rd) + ", " + reg_name(in.rn);
        case Op::CmpImm:
            std::snprintf(buf, sizeof buf, "cmp %s, #%u", reg_name(in.rd).c_str(), in.imm16);
            return buf;
        case Op::B:
        case Op::Beq:
        case Op::Bne:
        case Op::Blo:
        case Op::Bhs:
        case Op::Bl: {
            const char* mnem = in.op == Op::B     ? "b"
                               : in.op == Op::Beq ? "beq"
                               : in.op == Op::Bne ? "bne"
                               : in.op == Op::Blo ? "blo"
                               : in.op == Op::Bhs ? "bhs"
                                                  : "bl";
            std::snprintf(buf, sizeof buf, "%s %+d", mnem, in.off24);
            return buf;
        }
        case Op::Bx: return "bx " + reg_name(in.rd);
        case Op::DiceCdi: return "dicecdi " + reg_name(in.rd);
        case Op::DiceId: return "diceid " + reg_name(in.rd);
        case Op::SbVerify: return "sbveri " + reg_name(in.rd);
        case Op::Sign: return "sign " + reg_name(in.rd);
    }
    return "?";
}

}  // namespace dicelab::isa
