#!/usr/bin/env python3
"""
Quick health check: files, settings, imports and a tiny end-to-end solve
"""

import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from dotenv import load_dotenv
load_dotenv()

ROOT = Path(__file__).parent.parent


def check_files():
    """Check required files exist"""
    print("🔍 Checking File Structure...")

    required_files = [
        "app.py",
        "requirements.txt",
        "config/presets.json",
        "config/false_alarm_sparse.ini",
        "config/detection_sparse.ini",
        "tools/wlasso.py",
        "tools/debias.py",
        "tools/detectors.py",
    ]

    issues = []
    for file_path in required_files:
        if (ROOT / file_path).exists():
            print(f"  ✅ {file_path}")
        else:
            issues.append(f"  ❌ {file_path} missing")

    if issues:
        print("\n".join(issues))
        return False
    return True


def check_settings():
    """Check DWLD_* environment settings parse"""
    print("\n🔍 Checking Settings...")

    from utils.settings import Settings
    settings = Settings.from_env()
    print(f"  ✅ threads={settings.threads} trials={settings.trials} seed={settings.master_seed}")
    print(f"  ✅ results_dir={settings.results_dir}")
    print(f"  ✅ database={'set' if settings.database_url else 'off'}")
    return True


def check_imports():
    """Check all modules import"""
    print("\n🔍 Checking Module Imports...")

    modules = [
        ("tools.sensing", "DesignMatrix"),
        ("tools.scene", "generate_scene"),
        ("tools.wlasso", "solve_weighted_lasso"),
        ("tools.debias", "debias"),
        ("tools.detectors", "dwld_pipeline"),
        ("tools.weight_opt", "optimize_weights"),
        ("tools.experiment_runner", "run_experiment"),
        ("tools.file_detection", "detect_once"),
        ("utils.config_loader", "load_config"),
        ("database.operations", "DatabaseOperations"),
    ]

    issues = []
    for module_name, attr in modules:
        try:
            module = __import__(module_name, fromlist=[attr])
            getattr(module, attr)
            print(f"  ✅ {module_name}.{attr}")
        except Exception as e:
            issues.append(f"  ❌ {module_name}.{attr}: {e}")

    if issues:
        print("\n".join(issues))
        return False
    return True


def check_pipeline():
    """Solve and debias one small scene"""
    print("\n🔍 Checking Pipeline...")

    try:
        from tools.detectors import dwld_pipeline
        from tools.scene import NoiseSpec, SceneConfig, generate_scene, sigma_x2_for_snr, two_level_prior
        from tools.weight_opt import WeightModel
        from utils.seeding import trial_rng

        config = SceneConfig(
            N=64, M=32, sigma_x2=sigma_x2_for_snr(20.0, 0.5, 0.01),
            noise=NoiseSpec(0.01), prior=two_level_prior(64, 0.01, 0.8),
        )
        scene = generate_scene(config, trial_rng(0, 0))
        weights = WeightModel("linear", 0.1, 0.1).weights(config.prior)
        result = dwld_pipeline(scene.y, scene.A, weights, 0.01, scene.sigma2)
        print(f"  ✅ sigma_w2={result.debiased.sigma_w2:.4g} detections={int(result.decisions.sum())}")
        return True
    except Exception as e:
        print(f"  ❌ Pipeline Error: {e}")
        return False


def check_database():
    """Check the configured database, if any"""
    print("\n🔍 Checking Database...")

    from utils.settings import Settings
    url = Settings.from_env().database_url
    if not url:
        print("  ⏭️  DWLD_DATABASE_URL not set, skipping")
        return True
    try:
        from database.connection import DatabaseManager
        ok = DatabaseManager(url).test_connection()
        print(f"  {'✅' if ok else '❌'} {url.split('@')[-1]}")
        return ok
    except Exception as e:
        print(f"  ❌ Database Error: {e}")
        return False


def main():
    """Run all health checks"""
    print("=" * 60)
    print("  DWLD - Health Check")
    print("=" * 60)

    checks = [
        ("File Structure", check_files),
        ("Settings", check_settings),
        ("Module Imports", check_imports),
        ("Pipeline", check_pipeline),
        ("Database", check_database),
    ]

    results = []
    for check_name, check_func in checks:
        try:
            result = check_func()
            results.append((check_name, result))
        except Exception as e:
            print(f"\n❌ {check_name} failed with exception: {e}")
            results.append((check_name, False))

    # Summary
    print("\n" + "=" * 60)
    print("  Health Check Summary")
    print("=" * 60)

    passed = sum(1 for _, result in results if result)
    total = len(results)

    for check_name, result in results:
        status = "✅ PASS" if result else "❌ FAIL"
        print(f"{status}  {check_name}")

    print(f"\nResult: {passed}/{total} checks passed")

    if passed == total:
        print("\n🎉 All systems operational!")
        return 0
    else:
        print("\n⚠️  Some checks failed. Please review above.")
        return 1


if __name__ == "__main__":
    sys.exit(main())
