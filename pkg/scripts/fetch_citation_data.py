#!/usr/bin/env python3
"""
Fetch Citation Data
Downloads Cora, CiteSeer and PubMed into <data_dir>/<name>/<name>.content|cites

Usage:
    python scripts/fetch_citation_data.py --datasets cora,citeseer --data-dir data
"""

import sys
import os
import argparse
import logging

# Add the project root to the Python path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dotenv import load_dotenv

from dataset_client import CitationDataClient
from shoestring_errors import ShoestringError

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)


def main():
    """Main function for command line usage"""
    load_dotenv('.env.local')

    parser = argparse.ArgumentParser(description='Download public citation network datasets')
    parser.add_argument('--datasets', default='cora,citeseer,pubmed', help='Comma separated dataset names')
    parser.add_argument('--data-dir', default=None, help='Dataset root (default: $SHOESTRING_DATA_DIR or ./data)')
    parser.add_argument('--force', action='store_true', help='Download even if files exist')
    parser.add_argument('--list', action='store_true', help='List available datasets and exit')
    parser.add_argument('--verbose', '-v', action='store_true', help='Enable verbose logging')

    args = parser.parse_args()

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    client = CitationDataClient.from_config()

    if args.list:
        print("📊 Available Datasets:")
        for dataset in client.list_datasets():
            print(f"   - {dataset['key']}: {dataset['name']} ({dataset['description']})")
        return 0

    failed = []
    for name in [n.strip() for n in args.datasets.split(',') if n.strip()]:
        try:
            content_path, _ = client.download(name, args.data_dir, force=args.force)
            print(f"✅ {name}: {content_path.parent}")
        except (ShoestringError, ValueError) as e:
            logger.error(f"❌ {name}: {e}")
            failed.append(name)

    return 1 if failed else 0


if __name__ == '__main__':
    exit_code = main()
    sys.exit(exit_code)
