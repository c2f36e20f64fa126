#pragma once

#include <cstdint>

// Address-space layout of the simulated microcontroller. One flat table so the
// simulator, the firmware builder and the exploit tooling agree byte-for-byte.
namespace dicelab::mm {

// --- flash ---
inline constexpr uint32_t kFlashBase = 0x00000000;
inline constexpr uint32_t kFlashSize = 1024 * 1024;  // 1 MB
inline constexpr uint32_t kPageSize = 4096;          // 256 pages of 4 KB
inline constexpr uint32_t kPageCount = kFlashSize / kPageSize;

// --- RAM ---
inline constexpr uint32_t kRamBase = 0x20000000;
inline constexpr uint32_t kRamSize = 256 * 1024;
inline constexpr uint32_t kRamEnd = kRamBase + kRamSize;

// Stack grows down from the top of RAM. The app reserves a fixed scratch
// region above its working stack pointer (network-stack headroom).
inline constexpr uint32_t kStackTop = kRamEnd;
inline constexpr uint32_t kStackReserve = 1536;
inline constexpr uint32_t kLoopSp = kStackTop - kStackReserve;

// --- peripheral window ---
inline constexpr uint32_t kPeriphBase = 0x40000000;
inline constexpr uint32_t kPeriphEnd = 0x40001000;

inline constexpr uint32_t kNvmcConfig = 0x40000504;     // 0 ro, 1 wen, 2 een
inline constexpr uint32_t kNvmcErasePage = 0x40000508;  // page start address
inline constexpr uint32_t kAclBase = 0x40000600;        // 8 regions x 16 bytes
inline constexpr uint32_t kAclRegionStride = 16;        // +0 addr +4 size +8 perm
inline constexpr uint32_t kAclRegionCount = 8;
inline constexpr uint32_t kTimerCtrl = 0x40000700;  // 1 arms the tick timer
inline constexpr uint32_t kAwdtPeriod = 0x40000A00;
inline constexpr uint32_t kAwdtToken = 0x40000A04;    // RAM address of a token
inline constexpr uint32_t kAwdtKeyAddr = 0x40000A08;  // flash address of pubkey
inline constexpr uint32_t kAircr = 0x40000D0C;
inline constexpr uint32_t kAircrResetValue = 0x05FA0004;

// --- flash layout of the firmware image ---
inline constexpr uint32_t kBootBase = 0x00000000;
inline constexpr uint32_t kRiotBase = 0x00001000;
inline constexpr uint32_t kParamBlock = 0x00001800;   // derivation parameters
inline constexpr uint32_t kSbAppParams = 0x00001900;  // secure-boot app check
inline constexpr uint32_t kAppBase = 0x00002000;
inline constexpr uint32_t kSchedInit = 0x00034000;  // patched by the attack
inline constexpr uint32_t kNetInit = 0x00034100;
inline constexpr uint32_t kLibBase = 0x00040000;

inline constexpr uint32_t kPatcherPage = 0x000F8000;   // attack-written
inline constexpr uint32_t kUsefulPage = 0x000F9000;    // attack-written
inline constexpr uint32_t kMetaBase = 0x000FA000;      // layer signatures
inline constexpr uint32_t kCounterBase = 0x000FB000;   // boot counter words
inline constexpr uint32_t kCounterWords = 512;
inline constexpr uint32_t kNonceSlot = 0x000FB800;     // next-boot nonce cache
inline constexpr uint32_t kRam2FlashPage = 0x000FC000; // attack-written
inline constexpr uint32_t kCredFlash = 0x000FD000;     // attack-written
inline constexpr uint32_t kFlash2RamPage = 0x000FE000; // attack-written
inline constexpr uint32_t kUdsPage = 0x000FF000;

// --- RAM layout ---
inline constexpr uint32_t kCredRam = 0x20000000;  // alias key (64) + cert (204)
inline constexpr uint32_t kCredKeyLen = 64;
inline constexpr uint32_t kCredCertLen = 204;  // 202-byte cert + 2 pad
inline constexpr uint32_t kCredLen = kCredKeyLen + kCredCertLen;
inline constexpr uint32_t kCdiRam = 0x20000200;
inline constexpr uint32_t kSignParams = 0x20000300;

inline constexpr uint32_t kRunState = 0x20001000;
inline constexpr uint32_t kSchedFlag = 0x20001004;
inline constexpr uint32_t kNetFlag = 0x20001008;
inline constexpr uint32_t kRxFlag = 0x2000100C;
inline constexpr uint32_t kRxWords = 0x20001010;
inline constexpr uint32_t kTxFlag = 0x20001014;
inline constexpr uint32_t kTxLen = 0x20001018;

inline constexpr uint32_t kRxBuf = 0x20002000;
inline constexpr uint32_t kTxBuf = 0x20002800;
inline constexpr uint32_t kSentinel = 0x20004000;
inline constexpr uint32_t kPageScratch = 0x20008000;

inline constexpr uint32_t kRunMagic = 0x214E5552;    // "RUN!"
inline constexpr uint32_t kSchedMagic = 0x5EC0DE01;
inline constexpr uint32_t kNetMagic = 0x5EC0DE02;
inline constexpr uint32_t kAwdtMagic = 0x54445741;   // "AWDT"
inline constexpr uint32_t kSentinelValue = 0x600DC0DE;

// --- transport ---
inline constexpr uint32_t kMtu = 1280;

// Field offsets of the derivation parameter block at kParamBlock. Consumed by
// the dicecdi/diceid intrinsics; emitted by the firmware builder.
namespace pb {
inline constexpr uint32_t kUdsAddr = 0;
inline constexpr uint32_t kRiotBase = 4;
inline constexpr uint32_t kRiotLen = 8;
inline constexpr uint32_t kAppBase = 12;
inline constexpr uint32_t kAppLen = 16;
inline constexpr uint32_t kLibBase = 20;
inline constexpr uint32_t kLibLen = 24;
inline constexpr uint32_t kVersion = 28;
inline constexpr uint32_t kCdiRam = 32;
inline constexpr uint32_t kCredRam = 36;
inline constexpr uint32_t kBootInputMode = 40;  // 0 none, 1 nonce, 2 counter
inline constexpr uint32_t kNonceSlot = 44;
inline constexpr uint32_t kCounterBase = 48;
inline constexpr uint32_t kCounterWords = 52;
inline constexpr uint32_t kSize = 56;
}  // namespace pb

// Field offsets of a secure-boot check parameter block (sbveri intrinsic).
namespace sb {
inline constexpr uint32_t kKeyAddr = 0;
inline constexpr uint32_t kSigAddr = 4;
inline constexpr uint32_t kExtra = 8;
inline constexpr uint32_t kRangeCount = 12;
inline constexpr uint32_t kRanges = 16;  // (base, len) pairs
}  // namespace sb

// Field offsets of a sign-request parameter block (sign intrinsic).
namespace sg {
inline constexpr uint32_t kKeyAddr = 0;
inline constexpr uint32_t kMsgAddr = 4;
inline constexpr uint32_t kMsgLen = 8;
inline constexpr uint32_t kOutAddr = 12;
inline constexpr uint32_t kSize = 16;
}  // namespace sg

inline constexpr uint32_t page_base(uint32_t addr) { return addr & ~(kPageSize - 1); }

}  // namespace dicelab::mm
