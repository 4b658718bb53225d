import sys
from cascade_lab.cli import run_cli

def main():
    """
    Entry point for cascade-lab. With no arguments, runs the bundled
    condensation scenario and checks its acceptance gates.
    """
    argv = sys.argv[1:] or ["run", "z_condensation", "--check"]
    try:
        code = run_cli(argv)
    except Exception as e:
        print(f"Critical Error: {e}")
        sys.exit(1)
    sys.exit(code)

if __name__ == "__main__":
    main()
