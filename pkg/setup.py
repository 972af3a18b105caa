#!/usr/bin/env python3
"""
PCA Lab Setup Script

This script helps you set up the environment and verify all prerequisites.
Run this before using pca-lab for the first time.
"""

import os
import subprocess
import sys


def check_python_version():
    """Check if Python version is 3.11 or higher (tomllib)"""
    print("🐍 Checking Python version...")
    if sys.version_info < (3, 11):
        print("❌ Python 3.11+ is required. Current version:", sys.version)
        return False
    print(f"✅ Python {sys.version.split()[0]} is compatible")
    return True


def check_dependencies():
    """Check if required packages are installed"""
    print("\n📦 Checking dependencies...")
    required_packages = ["numpy", "scipy", "python-dotenv", "pytest", "hypothesis"]
    missing_packages = []

    for package in required_packages:
        try:
            if package == "python-dotenv":
                __import__("dotenv")
            else:
                __import__(package.lower())
            print(f"✅ {package} is installed")
        except ImportError:
            print(f"❌ {package} is missing")
            missing_packages.append(package)

    if missing_packages:
        print(f"\n🔧 Installing missing packages: {', '.join(missing_packages)}")
        try:
            subprocess.check_call([sys.executable, "-m", "pip", "install"] + missing_packages)
            print("✅ All dependencies installed successfully")
            return True
        except subprocess.CalledProcessError:
            print("❌ Failed to install dependencies. Please install manually:")
            print("   pip install -r requirements.txt")
            return False

    return True


def create_directories():
    """Create necessary directories"""
    print("\n📁 Creating directories...")

    directories = [
        "data",
        "data/output",
        "data/datasets",
        "data/examples",
    ]

    for directory in directories:
        if not os.path.exists(directory):
            os.makedirs(directory)
            print(f"✅ Created {directory}/ directory")
        else:
            print(f"✅ {directory}/ directory already exists")


def create_env_file():
    """Create .env from .env.example if it doesn't exist"""
    print("\n🔑 Checking environment configuration...")

    env_file = ".env"
    env_example = ".env.example"

    if os.path.exists(env_file):
        print(f"✅ {env_file} already exists")
        return True

    if os.path.exists(env_example):
        with open(env_example, "r") as src, open(env_file, "w") as dst:
            dst.write(src.read())
        print(f"✅ Created {env_file} from template")
    else:
        with open(env_file, "w") as f:
            f.write("# PCA Lab Configuration\n")
            f.write("PCA_LAB_OUTPUT_DIR=data/output\n")
            f.write("PCA_LAB_SEED=0\n")
            f.write("PCA_LAB_JOBS=1\n")
            f.write("PCA_LAB_EIGEN_SOLVER=jacobi\n")
        print(f"✅ Created {env_file}")
    return True


def check_eigensolver():
    """Check the configured eigensolver on a small matrix"""
    print("\n🔍 Checking eigensolver...")

    try:
        sys.path.insert(0, ".")
        import numpy as np

        from linalg_core import SymMatrix, eig_sym
        from pca_config import EIGEN_SOLVER

        spectrum = eig_sym(SymMatrix.diag([3.0, 1.0, 2.0]), solver=EIGEN_SOLVER)
        if not np.allclose(spectrum.eigenvalues, [3.0, 2.0, 1.0]):
            print(f"❌ {EIGEN_SOLVER} returned {spectrum.eigenvalues}")
            return False
        print(f"✅ {EIGEN_SOLVER} eigensolver working correctly")
        return True

    except Exception as e:
        print(f"❌ Eigensolver check failed: {e}")
        return False


def run_basic_test():
    """Run the cheapest registered experiment once"""
    print("\n🧪 Running basic functionality test...")

    try:
        sys.path.insert(0, ".")
        from experiments import ExperimentFactory, resolve_params, run_seed

        experiment = ExperimentFactory.create_experiment("epca-tightness")
        rows = run_seed(experiment.name, resolve_params(experiment, {"k": [1, 2]}), seed=0)
        if all(row.passed for row in rows):
            print(f"✅ Core functionality test passed ({len(rows)} rows)")
            return True
        print("❌ epca-tightness rows failed")
        return False

    except Exception as e:
        print(f"❌ Basic test failed: {e}")
        return False


def main():
    """Main setup function"""
    print("🚀 PCA Lab Setup")
    print("=" * 60)

    checks = [
        check_python_version(),
        check_dependencies(),
    ]

    # Always create directories and files
    create_directories()
    env_ok = create_env_file()

    solver_ok = check_eigensolver()
    basic_test_ok = run_basic_test()

    print("\n" + "=" * 60)
    print("📋 Setup Summary:")

    if all(checks) and env_ok and solver_ok and basic_test_ok:
        print("✅ Environment setup completed successfully!")
        print("")
        print("🎉 You're ready to run experiments!")
        print("")
        print("📋 Usage options:")
        print("   Interactive: ./run_sweep.sh")
        print("   Command line: ./pca-lab list")
        print("   Config file: ./pca-lab run --config data/examples/epca_lossless.toml")
        print("")
        print("📁 File locations:")
        print("   Configs:  data/examples/*.toml")
        print("   Reports:  data/output/<experiment>.csv, data/output/<experiment>.json")
        print("   Datasets: data/datasets/")
    else:
        print("❌ Setup incomplete. Please fix the issues above.")
        print("")
        print("📋 Next steps:")
        print("1. Install missing dependencies: pip install -r requirements.txt")
        print("2. Check PCA_LAB_EIGEN_SOLVER in your .env file (jacobi or lapack)")
        print("3. Run the test suite: pytest -q")
        sys.exit(1)


if __name__ == "__main__":
    main()
