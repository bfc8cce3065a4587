"""Checked-in 124-entry pass action list for best-pass labeling.

Names follow the classic LLVM opt flag spelling (without the leading
dash; the driver applies its configured prefix). The list is versioned
and overridable from the run config; labeling only requires that the
configured optimizer accepts each name as a flag.
"""

ACTION_SPACE_ID = "llvm-124/v1"

ACTION_SPACE_124 = [
    "add-discriminators", "adce", "aggressive-instcombine",
    "alignment-from-assumptions", "always-inline", "argpromotion",
    "attributor", "barrier", "bdce", "break-crit-edges", "simplifycfg",
    "callsite-splitting", "called-value-propagation",
    "canonicalize-aliases", "consthoist", "constmerge", "constprop",
    "coro-cleanup", "coro-early", "coro-elide", "coro-split",
    "correlated-propagation", "cross-dso-cfi", "deadargelim", "dce",
    "die", "dse", "reg2mem", "div-rem-pairs", "early-cse-memssa",
    "early-cse", "ee-instrument", "elim-avail-extern", "flattencfg",
    "float2int", "forceattrs", "inline", "insert-gcov-profiling",
    "gvn-hoist", "gvn", "globaldce", "globalopt", "globalsplit",
    "guard-widening", "hotcoldsplit", "ipconstprop", "ipsccp", "indvars",
    "irce", "infer-address-spaces", "inferattrs", "inject-tli-mappings",
    "instsimplify", "instcombine", "instnamer", "jump-threading",
    "lcssa", "licm", "libcalls-shrinkwrap", "load-store-vectorizer",
    "loop-data-prefetch", "loop-deletion", "loop-distribute",
    "loop-fusion", "loop-guard-widening", "loop-idiom",
    "loop-instsimplify", "loop-interchange", "loop-load-elim",
    "loop-predication", "loop-reroll", "loop-rotate",
    "loop-simplifycfg", "loop-simplify", "loop-sink", "loop-reduce",
    "loop-unroll-and-jam", "loop-unroll", "loop-unswitch",
    "loop-vectorize", "loop-versioning-licm", "loop-versioning",
    "loweratomic", "lower-constant-intrinsics", "lower-expect",
    "lower-guard-intrinsic", "lowerinvoke", "lower-matrix-intrinsics",
    "lowerswitch", "lower-widenable-condition", "memcpyopt",
    "mergefunc", "mergeicmps", "mldst-motion", "sancov",
    "name-anon-globals", "nary-reassociate", "newgvn", "pgo-memop-opt",
    "partial-inliner", "partially-inline-libcalls",
    "post-inline-ee-instrument", "functionattrs", "mem2reg", "prune-eh",
    "reassociate", "redundant-dbg-inst-elim", "rpo-functionattrs",
    "rewrite-statepoints-for-gc", "sccp", "slp-vectorizer", "sroa",
    "scalarizer", "separate-const-offset-from-gep",
    "simple-loop-unswitch", "sink", "speculative-execution", "slsr",
    "strip-dead-prototypes", "strip-debug-declare", "strip-nondebug",
    "strip", "tailcallelim", "mergereturn",
]
