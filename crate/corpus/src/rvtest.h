// Bare-metal test environment: M-mode start, case number in gp, result
// reported through tohost (1 = pass, (case << 1) | 1 = fail).

#define TESTNUM gp

#if __riscv_xlen == 64
#define LREG ld
#define SREG sd
#define REGBYTES 8
#define SEXT32(r) addiw r, r, 0
#define PTR .dword
#else
#define LREG lw
#define SREG sw
#define REGBYTES 4
#define SEXT32(r)
#define PTR .word
#endif

#define RVTEST_CODE_BEGIN                                               \
        .section .text.init;                                            \
        .align 6;                                                       \
        .globl _start;                                                  \
_start:                                                                 \
        j reset_vector;                                                 \
        .align 2;                                                       \
trap_vector:                                                            \
        csrr t5, mcause;                                                \
        li t6, 8;  beq t5, t6, write_tohost;                            \
        li t6, 9;  beq t5, t6, write_tohost;                            \
        li t6, 11; beq t5, t6, write_tohost;                            \
        LREG t5, mtvec_handler_ptr;                                     \
        beqz t5, 1f;                                                    \
        jr t5;                                                          \
1:      li TESTNUM, 1337;                                               \
        j fail_unexpected;                                              \
write_tohost:                                                           \
        sw TESTNUM, tohost, t5;                                         \
        sw zero, tohost + 4, t5;                                        \
        j write_tohost;                                                 \
fail_unexpected:                                                        \
        sll TESTNUM, TESTNUM, 1;                                        \
        or TESTNUM, TESTNUM, 1;                                         \
        j write_tohost;                                                 \
        .weak mtvec_handler;                                            \
        .align 3;                                                       \
mtvec_handler_ptr:                                                      \
        PTR mtvec_handler;                                              \
reset_vector:                                                           \
        li TESTNUM, 0;                                                  \
        la t0, trap_vector;                                             \
        csrw mtvec, t0;                                                 \
        csrwi medeleg, 0;                                               \
        li t0, 3 << 13;                                                 \
        csrs mstatus, t0;                                               \
        csrwi fcsr, 0;                                                  \
        li t0, 3 << 11;                                                 \
        csrc mstatus, t0;                                               \
        li t0, 3 << 11;                                                 \
        csrs mstatus, t0;                                               \
        la t0, 1f;                                                      \
        csrw mepc, t0;                                                  \
        mret;                                                           \
        .text;                                                          \
1:

#define RVTEST_CODE_END unimp

#define RVTEST_PASS                                                     \
        fence;                                                          \
        li TESTNUM, 1;                                                  \
        li a7, 93;                                                      \
        li a0, 0;                                                       \
        ecall

#define RVTEST_FAIL                                                     \
        fence;                                                          \
1:      beqz TESTNUM, 1b;                                               \
        sll TESTNUM, TESTNUM, 1;                                        \
        or TESTNUM, TESTNUM, 1;                                         \
        li a7, 93;                                                      \
        addi a0, TESTNUM, 0;                                            \
        ecall

#define RVTEST_DATA_BEGIN                                               \
        .pushsection .tohost, "aw", @progbits;                          \
        .align 6; .global tohost; tohost: .dword 0; .size tohost, 8;    \
        .align 6; .global fromhost; fromhost: .dword 0; .size fromhost, 8; \
        .popsection;                                                    \
        .data;                                                          \
        .align 4

#define RVTEST_DATA_END

// Test cases. Each loads its case number into gp first.

#define TEST_CASE(n, testreg, correctval, code...)                      \
test_ ## n:                                                             \
        li TESTNUM, n;                                                  \
        code;                                                           \
        li x7, correctval;                                              \
        bne testreg, x7, fail;

#define TEST_IMM_OP(n, inst, result, val1, imm)                         \
        TEST_CASE(n, x14, result,                                       \
          li x1, val1;                                                  \
          inst x14, x1, imm)

#define TEST_IMM_SRC1_EQ_DEST(n, inst, result, val1, imm)               \
        TEST_CASE(n, x1, result,                                        \
          li x1, val1;                                                  \
          inst x1, x1, imm)

#define TEST_RR_OP(n, inst, result, val1, val2)                         \
        TEST_CASE(n, x14, result,                                       \
          li x1, val1;                                                  \
          li x2, val2;                                                  \
          inst x14, x1, x2)

#define TEST_RR_SRC12_EQ_DEST(n, inst, result, val1)                    \
        TEST_CASE(n, x1, result,                                        \
          li x1, val1;                                                  \
          inst x1, x1, x1)

#define TEST_RR_ZERODEST(n, inst, val1, val2)                           \
        TEST_CASE(n, x0, 0,                                             \
          li x1, val1;                                                  \
          li x2, val2;                                                  \
          inst x0, x1, x2)

#define TEST_BR2_TAKEN(n, inst, val1, val2)                             \
test_ ## n:                                                             \
        li TESTNUM, n;                                                  \
        li x1, val1;                                                    \
        li x2, val2;                                                    \
        inst x1, x2, 2f;                                                \
        bne x0, TESTNUM, fail;                                          \
1:      bne x0, TESTNUM, 3f;                                            \
2:      inst x1, x2, 1b;                                                \
        bne x0, TESTNUM, fail;                                          \
3:

#define TEST_BR2_NOT_TAKEN(n, inst, val1, val2)                         \
test_ ## n:                                                             \
        li TESTNUM, n;                                                  \
        li x1, val1;                                                    \
        li x2, val2;                                                    \
        inst x1, x2, 1f;                                                \
        bne x0, TESTNUM, 2f;                                            \
1:      bne x0, TESTNUM, fail;                                          \
2:      inst x1, x2, 1b;                                                \
3:

#define TEST_LD_OP(n, inst, result, offset, base)                       \
        TEST_CASE(n, x14, result,                                       \
          la x1, base;                                                  \
          inst x14, offset(x1))

#define TEST_ST_OP(n, load_inst, store_inst, result, offset, base)      \
        TEST_CASE(n, x14, result,                                       \
          la x1, base;                                                  \
          li x2, result;                                                \
          store_inst x2, offset(x1);                                    \
          load_inst x14, offset(x1))

// Single-precision cases. Operands and the expected result come from the
// assembler's float directives; flags are compared exactly.

#define TEST_FP_OP_S_INTERNAL(n, flags, result, val1, val2, val3, code...) \
test_ ## n:                                                             \
        li TESTNUM, n;                                                  \
        la a0, test_ ## n ## _data;                                     \
        flw f0, 0(a0);                                                  \
        flw f1, 4(a0);                                                  \
        flw f2, 8(a0);                                                  \
        lw a3, 12(a0);                                                  \
        code;                                                           \
        fsflags a1, x0;                                                 \
        li a2, flags;                                                   \
        bne a0, a3, fail;                                               \
        bne a1, a2, fail;                                               \
        .pushsection .data;                                             \
        .align 2;                                                       \
test_ ## n ## _data:                                                    \
        .float val1;                                                    \
        .float val2;                                                    \
        .float val3;                                                    \
        result;                                                         \
        .popsection

#define TEST_FP_OP1_S(n, inst, flags, result, val1)                     \
        TEST_FP_OP_S_INTERNAL(n, flags, .float result, val1, 0.0, 0.0,  \
          inst f3, f0; fmv.x.w a0, f3)

#define TEST_FP_OP1_S_DWORD_RESULT(n, inst, flags, result, val1)        \
        TEST_FP_OP_S_INTERNAL(n, flags, .word result, val1, 0.0, 0.0,   \
          inst f3, f0; fmv.x.w a0, f3)

#define TEST_FP_OP2_S(n, inst, flags, result, val1, val2)               \
        TEST_FP_OP_S_INTERNAL(n, flags, .float result, val1, val2, 0.0, \
          inst f3, f0, f1; fmv.x.w a0, f3)

#define TEST_FP_OP3_S(n, inst, flags, result, val1, val2, val3)         \
        TEST_FP_OP_S_INTERNAL(n, flags, .float result, val1, val2, val3, \
          inst f3, f0, f1, f2; fmv.x.w a0, f3)

#define TEST_FP_INT_OP_S(n, inst, flags, result, val1, rm)              \
        TEST_FP_OP_S_INTERNAL(n, flags, .word result, val1, 0.0, 0.0,   \
          inst a0, f0, rm)

#define TEST_FP_INT64_OP_S(n, inst, flags, result, val1, rm)            \
test_ ## n:                                                             \
        li TESTNUM, n;                                                  \
        la a0, test_ ## n ## _data;                                     \
        flw f0, 0(a0);                                                  \
        ld a3, 8(a0);                                                   \
        inst a0, f0, rm;                                                \
        fsflags a1, x0;                                                 \
        li a2, flags;                                                   \
        bne a0, a3, fail;                                               \
        bne a1, a2, fail;                                               \
        .pushsection .data;                                             \
        .align 3;                                                       \
test_ ## n ## _data:                                                    \
        .float val1;                                                    \
        .word 0;                                                        \
        .dword result;                                                  \
        .popsection

#define TEST_FP_CMP_OP_S(n, inst, flags, result, val1, val2)            \
        TEST_FP_OP_S_INTERNAL(n, flags, .word result, val1, val2, 0.0,  \
          inst a0, f0, f1)

#define TEST_INT_FP_OP_S(n, inst, result, val1)                         \
test_ ## n:                                                             \
        li TESTNUM, n;                                                  \
        la a0, test_ ## n ## _data;                                     \
        lw a3, 0(a0);                                                   \
        li a0, val1;                                                    \
        inst f0, a0;                                                    \
        fsflags x0;                                                     \
        fmv.x.w a0, f0;                                                 \
        bne a0, a3, fail;                                               \
        .pushsection .data;                                             \
        .align 2;                                                       \
test_ ## n ## _data:                                                    \
        .float result;                                                  \
        .popsection

#define TEST_PASSFAIL                                                   \
        bne x0, TESTNUM, pass;                                          \
fail:                                                                   \
        RVTEST_FAIL;                                                    \
pass:                                                                   \
        RVTEST_PASS

// Operands and result given as raw bit patterns.

#define TEST_FP_BITS_INTERNAL(n, flags, result, w1, w2, w3, code...)   \
test_ ## n:                                                             \
        li TESTNUM, n;                                                  \
        la a0, test_ ## n ## _data;                                     \
        flw f0, 0(a0);                                                  \
        flw f1, 4(a0);                                                  \
        flw f2, 8(a0);                                                  \
        lw a3, 12(a0);                                                  \
        code;                                                           \
        fsflags a1, x0;                                                 \
        li a2, flags;                                                   \
        bne a0, a3, fail;                                               \
        bne a1, a2, fail;                                               \
        .pushsection .data;                                             \
        .align 2;                                                       \
test_ ## n ## _data:                                                    \
        .word w1;                                                       \
        .word w2;                                                       \
        .word w3;                                                       \
        .word result;                                                   \
        .popsection

#define TEST_FP_OP1_BITS(n, inst, flags, result, w1)                    \
        TEST_FP_BITS_INTERNAL(n, flags, result, w1, 0, 0,               \
          inst f3, f0; fmv.x.w a0, f3)

#define TEST_FP_OP2_BITS(n, inst, flags, result, w1, w2)                \
        TEST_FP_BITS_INTERNAL(n, flags, result, w1, w2, 0,              \
          inst f3, f0, f1; fmv.x.w a0, f3)

#define TEST_FP_OP3_BITS(n, inst, flags, result, w1, w2, w3)            \
        TEST_FP_BITS_INTERNAL(n, flags, result, w1, w2, w3,             \
          inst f3, f0, f1, f2; fmv.x.w a0, f3)

#define TEST_FP_CMP_BITS(n, inst, flags, result, w1, w2)                \
        TEST_FP_BITS_INTERNAL(n, flags, result, w1, w2, 0,              \
          inst a0, f0, f1)

#define TEST_FP_INT_BITS(n, inst, flags, result, w1, rm)                \
        TEST_FP_BITS_INTERNAL(n, flags, result, w1, 0, 0,               \
          inst a0, f0, rm)

#define TEST_FCLASS(n, result, w1)                                      \
        TEST_FP_BITS_INTERNAL(n, 0, result, w1, 0, 0,                   \
          fclass.s a0, f0)

#define QNAN 0x7fc00000
#define SNAN 0x7f800001
#define PINF 0x7f800000
#define NINF 0xff800000

// A 32-bit pattern as the sign-extended value a word load produces.
#define SW(v) ((v) - (((v) & 0x80000000) << 1))

// Expected traps. A case loads the cause it expects into s11 and the
// expected trap value into s10; the handler checks both, counts the trap in
// s9 and resumes after the faulting instruction.

#if __riscv_xlen == 64
#define LWU lwu
#else
#define LWU lw
#endif

#define TRAP_HANDLER                                                    \
        .align 2;                                                       \
mtvec_handler:                                                          \
        csrr t5, mcause;                                                \
        bne t5, s11, fail;                                              \
        csrr t5, mtval;                                                 \
        bne t5, s10, fail;                                              \
        addi s9, s9, 1;                                                 \
        csrr t5, mepc;                                                  \
        addi t5, t5, 4;                                                 \
        csrw mepc, t5;                                                  \
        mret

#define TEST_TRAP(n, cause, tval, code...)                              \
test_ ## n:                                                             \
        li TESTNUM, n;                                                  \
        li s11, cause;                                                  \
        li s10, tval;                                                   \
        li s9, 0;                                                       \
        code;                                                           \
        li t0, 1;                                                       \
        bne s9, t0, fail

// The faulting instruction's own encoding is the expected mtval.
#define TEST_ILLEGAL(n, insn...)                                        \
test_ ## n:                                                             \
        li TESTNUM, n;                                                  \
        li s11, 2;                                                      \
        la t0, 1f;                                                      \
        LWU s10, 0(t0);                                                 \
        li s9, 0;                                                       \
1:      insn;                                                           \
        li t0, 1;                                                       \
        bne s9, t0, fail

// No trap expected.
#define TEST_NO_TRAP(n, code...)                                        \
test_ ## n:                                                             \
        li TESTNUM, n;                                                  \
        li s11, -1;                                                     \
        li s9, 0;                                                       \
        code;                                                           \
        bnez s9, fail

// Supervisor counterpart of TRAP_HANDLER for delegated traps. With s11 = -1
// it instead jumps to s10, staying in S-mode. An instruction page fault
// resumes at ra.
#define STRAP_HANDLER                                                   \
        .align 2;                                                       \
stvec_handler:                                                          \
        li t5, -1;                                                      \
        bne s11, t5, 1f;                                                \
        jr s10;                                                         \
1:      csrr t5, scause;                                                \
        bne t5, s11, fail;                                              \
        csrr t5, stval;                                                 \
        bne t5, s10, fail;                                              \
        addi s9, s9, 1;                                                 \
        csrr t5, scause;                                                \
        li t6, 12;                                                      \
        bne t5, t6, 2f;                                                 \
        csrw sepc, ra;                                                  \
        sret;                                                           \
2:      csrr t5, sepc;                                                  \
        addi t5, t5, 4;                                                 \
        csrw sepc, t5;                                                  \
        sret

// Enters S-mode at the next instruction with stvec_handler installed and
// the causes in `mask` delegated.
#define ENTER_SUPERVISOR(mask)                                          \
        la t0, stvec_handler;                                           \
        csrw stvec, t0;                                                 \
        li t0, mask;                                                    \
        csrw medeleg, t0;                                               \
        li t0, 3 << 11;                                                 \
        csrc mstatus, t0;                                               \
        li t0, 1 << 11;                                                 \
        csrs mstatus, t0;                                               \
        la t0, 1f;                                                      \
        csrw mepc, t0;                                                  \
        mret;                                                           \
1:
