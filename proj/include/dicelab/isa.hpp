#pragma once

#include <cstdint>
#include <optional>
#include <string>

// Fixed-width 32-bit instruction set for the simulated core. The encoding is
// documented in docs/isa.md. Decoding is total: a word either maps to exactly
// one instruction (with all unused bits zero) or is undefined.
namespace dicelab::isa {

enum class Op : uint8_t {
    Nop = 0x01,
    Halt = 0x02,
    Push = 0x10,
    Pop = 0x11,
    Ldr = 0x12,
    Str = 0x13,
    Movw = 0x14,
    Movt = 0x15,
    Addi = 0x16,
    Mov = 0x17,
    CmpReg = 0x18,
    CmpImm = 0x19,
    B = 0x20,
    Beq = 0x21,
    Bne = 0x22,
    Blo = 0x23,
    Bhs = 0x24,
    Bl = 0x28,
    Bx = 0x29,
    Cpsid = 0x30,
    Cpsie = 0x31,
    DiceCdi = 0x40,
    DiceId = 0x41,
    SbVerify = 0x42,
    Sign = 0x43,
};

inline constexpr uint8_t kRegSp = 13;
inline constexpr uint8_t kRegLr = 14;
inline constexpr uint8_t kRegPc = 15;

struct Instr {
    Op op{};
    uint8_t rd = 0;        // rd / rt / rn-of-cmp / rm-of-bx, bits [23:20]
    uint8_t rn = 0;        // rn / rm, bits [19:16]
    uint16_t imm16 = 0;    // movw/movt/addi/cmpi payload
    uint16_t regmask = 0;  // push/pop register list
    int32_t off24 = 0;     // branch offset in words, sign-extended
};

std::optional<Instr> decode(uint32_t word);
uint32_t encode(const Instr& instr);
std::string disassemble(const Instr& instr);

inline Instr make_movw(uint8_t rd, uint16_t imm) { return {Op::Movw, rd, 0, imm, 0, 0}; }
inline Instr make_movt(uint8_t rd, uint16_t imm) { return {Op::Movt, rd, 0, imm, 0, 0}; }
inline Instr make_bx(uint8_t rm) { return {Op::Bx, rm, 0, 0, 0, 0}; }

}  // namespace dicelab::isa
