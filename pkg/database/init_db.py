#!/usr/bin/env python3
"""
Initialize the results database schema
"""

import argparse
import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent))

from dotenv import load_dotenv

from database.connection import get_db_manager

load_dotenv()
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def init_database(database_url=None, reset: bool = False) -> bool:
    manager = get_db_manager(database_url)
    logger.info(f"Initializing database at {manager.database_url}...")

    if not manager.test_connection():
        logger.error("Database connection failed!")
        return False

    if reset:
        manager.drop_tables()
    manager.create_tables()
    logger.info("✅ Database initialized successfully!")
    return True


def main():
    parser = argparse.ArgumentParser(description="Create the experiment results tables")
    parser.add_argument("--url", help="SQLAlchemy URL (default: DWLD_DATABASE_URL or local SQLite)")
    parser.add_argument("--reset", action="store_true", help="drop existing tables first")
    args = parser.parse_args()

    print("=" * 60)
    print("  DWLD - Results Database Initialization")
    print("=" * 60)
    sys.exit(0 if init_database(args.url, args.reset) else 1)


if __name__ == "__main__":
    main()
