#!/usr/bin/env python3
#
# Runs the test modules under tests/
#

import sys, os, glob, argparse, time, traceback
import importlib.util

ROOT = os.path.dirname(os.path.abspath(__file__))

def parse_args():
    parser = argparse.ArgumentParser(description="tunnel-tx Test Runner")
    parser.add_argument("module", nargs="?", help="test module (tests/test_*.py)")
    parser.add_argument("-k", dest="pattern", default=None, help="only run tests whose name contains PATTERN")
    parser.add_argument("--traceback", action="store_true", help="print the full traceback of failed tests")
    args = parser.parse_args(sys.argv[1:])
    return args

def load_module(path):
    name = os.path.splitext(os.path.basename(path))[0]
    spec = importlib.util.spec_from_file_location(name, path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module

# MAIN
if __name__ == '__main__':
    args = parse_args()
    sys.path.insert(0, ROOT)
    sys.path.insert(0, os.path.join(ROOT, "tests"))

    # If a test module is provided on the command line, run *only* that module,
    # otherwise run them all.
    if args.module is None:
        test_fname_list = sorted(glob.glob(os.path.join(ROOT, "tests", "test_*.py")))
    else:
        test_fname_list = [ args.module ]

    failed = 0
    total = 0
    for test_fname in test_fname_list:
        module = load_module(test_fname)
        tests = [(name, fn) for name, fn in vars(module).items() if name.startswith("test_") and callable(fn)]

        for name, fn in tests:
            if args.pattern is not None and args.pattern not in name:
                continue
            total += 1
            t0 = time.perf_counter()
            try:
                fn()
                result_str = "PASS"
            except Exception as e:
                failed += 1
                result_str = f"FAIL ({type(e).__name__}: {e})"
                if args.traceback:
                    traceback.print_exc()
            elapsed = time.perf_counter() - t0
            print(f"Test {module.__name__ + '.' + name:<60}: {result_str} [{elapsed:.2f}s]")

    print(f"{total - failed}/{total} tests passed")
    sys.exit(1 if failed else 0)
