#!/usr/bin/env python3
"""
Convert PubMed
Turns the PubMed-Diabetes tabular release (NODE.paper.tab, DIRECTED.cites.tab)
into pubmed.content and pubmed.cites

Usage:
    python scripts/convert_pubmed.py --node-tab Pubmed-Diabetes.NODE.paper.tab \
        --cites-tab Pubmed-Diabetes.DIRECTED.cites.tab --out-dir data/pubmed
"""

import sys
import os
import argparse
import logging

# Add the project root to the Python path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from citation_data import convert_pubmed_tab
from shoestring_errors import DataFormatError, ExportError

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)


def main():
    """Main function for command line usage"""
    parser = argparse.ArgumentParser(description='Convert the PubMed-Diabetes tab files to content/cites')
    parser.add_argument('--node-tab', required=True, help='Pubmed-Diabetes.NODE.paper.tab')
    parser.add_argument('--cites-tab', required=True, help='Pubmed-Diabetes.DIRECTED.cites.tab')
    parser.add_argument('--out-dir', default='data/pubmed', help='Output directory')
    parser.add_argument('--verbose', '-v', action='store_true', help='Enable verbose logging')

    args = parser.parse_args()

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        content_path, cites_path = convert_pubmed_tab(args.node_tab, args.cites_tab, args.out_dir)
    except (DataFormatError, ExportError, FileNotFoundError) as e:
        logger.error(f"❌ Conversion failed: {e}")
        return 1

    print(f"✅ Wrote {content_path} and {cites_path}")
    return 0


if __name__ == '__main__':
    exit_code = main()
    sys.exit(exit_code)
