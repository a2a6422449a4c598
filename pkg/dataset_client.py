#!/usr/bin/env python3
"""
Citation Dataset Client
Downloads the public LINQS citation tarballs and lays them out as
<data_dir>/<name>/<name>.content|cites

Dataset Coverage:
- Cora
- CiteSeer
- PubMed-Diabetes (converted from its tabular release)
"""

import io
import logging
import os
import shutil
import tarfile
import tempfile
import time
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import requests

from citation_data import convert_pubmed_tab, dataset_paths
from shoestring_errors import DownloadError

logger = logging.getLogger(__name__)


class CitationDataClient:
    """
    Client for the public citation network archives

    Features:
    - Dataset registry
    - Retries with exponential backoff on 429/5xx and timeouts
    - Archive extraction into the layout load_dataset expects
    """

    BASE_URL = "https://linqs-data.soe.ucsc.edu/public"

    DATASETS = {
        'cora': {
            'archive': 'lbc/cora.tgz',
            'name': 'Cora',
            'description': '2708 machine learning papers, 7 classes, 1433 binary word features'
        },
        'citeseer': {
            'archive': 'lbc/citeseer.tgz',
            'name': 'CiteSeer',
            'description': '3312 papers, 6 classes, 3703 binary word features'
        },
        'pubmed': {
            'archive': 'Pubmed-Diabetes.tgz',
            'name': 'PubMed-Diabetes',
            'description': '19717 diabetes papers, 3 classes, 500 TF-IDF features'
        },
    }

    def __init__(self, base_url: Optional[str] = None, timeout: int = 60):
        """
        Initialize the client

        Args:
            base_url: archive host (defaults to SHOESTRING_DATA_URL or the LINQS mirror)
            timeout: per-request timeout in seconds
        """
        self.base_url = (base_url or os.getenv('SHOESTRING_DATA_URL') or self.BASE_URL).rstrip('/')
        self.timeout = timeout

        self.session = requests.Session()
        self.session.headers.update({
            'User-Agent': 'Shoestring/1.0 (Graph Semi-Supervised Learning Experiments)',
            'Accept': 'application/octet-stream'
        })

    @classmethod
    def from_config(cls) -> 'CitationDataClient':
        """Create client from environment configuration"""
        return cls()

    def _make_request(self, url: str, retries: int = 3) -> requests.Response:
        """
        GET with error handling and retries

        Args:
            url: archive URL
            retries: number of attempts

        Returns:
            Response object
        """
        for attempt in range(retries):
            try:
                response = self.session.get(url, timeout=self.timeout)
                response.raise_for_status()
                return response

            except requests.exceptions.HTTPError as e:
                status = e.response.status_code if e.response is not None else 0
                if status == 429 or status >= 500:
                    logger.warning(f"HTTP {status}. Retry {attempt + 1}/{retries}")
                    if attempt < retries - 1:
                        time.sleep(2 ** attempt)
                else:
                    raise DownloadError(f"Download of {url} failed with HTTP {status}") from e

            except requests.exceptions.Timeout:
                logger.warning(f"Request timeout. Retry {attempt + 1}/{retries}")
                if attempt < retries - 1:
                    time.sleep(1)

            except requests.exceptions.RequestException as e:
                logger.error(f"Request failed: {e}")
                if attempt < retries - 1:
                    time.sleep(1)

        raise DownloadError(f"Failed to download {url} after {retries} retries")

    def archive_url(self, name: str) -> str:
        if name not in self.DATASETS:
            raise ValueError(f"Unknown dataset: {name}. Available: {list(self.DATASETS.keys())}")
        return f"{self.base_url}/{self.DATASETS[name]['archive']}"

    def download(self, name: str, data_dir=None, force: bool = False) -> Tuple[Path, Path]:
        """
        Download and unpack one dataset

        Args:
            name: key from DATASETS
            data_dir: dataset root (defaults to SHOESTRING_DATA_DIR or ./data)
            force: download even if the files already exist

        Returns:
            (content_path, cites_path)
        """
        data_dir = Path(data_dir or os.getenv('SHOESTRING_DATA_DIR', 'data'))
        content_path, cites_path = dataset_paths(name, data_dir)
        url = self.archive_url(name)
        if content_path.is_file() and cites_path.is_file() and not force:
            logger.info(f"{name} already present at {content_path.parent}")
            return content_path, cites_path

        logger.info(f"Fetching {name} from {url}")
        response = self._make_request(url)

        with tempfile.TemporaryDirectory() as scratch:
            self._extract(response.content, Path(scratch))
            content_path.parent.mkdir(parents=True, exist_ok=True)
            if name == 'pubmed':
                node_tab = self._find(Path(scratch), '*NODE.paper.tab')
                cites_tab = self._find(Path(scratch), '*DIRECTED.cites.tab')
                convert_pubmed_tab(node_tab, cites_tab, content_path.parent)
            else:
                shutil.copyfile(self._find(Path(scratch), f"{name}.content"), content_path)
                shutil.copyfile(self._find(Path(scratch), f"{name}.cites"), cites_path)

        logger.info(f"✅ {self.DATASETS[name]['name']} ready at {content_path.parent}")
        return content_path, cites_path

    @staticmethod
    def _extract(payload: bytes, target: Path):
        try:
            with tarfile.open(fileobj=io.BytesIO(payload), mode='r:*') as archive:
                archive.extractall(target, filter='data')
        except tarfile.TarError as e:
            raise DownloadError(f"Downloaded archive is not a readable tarball: {e}") from e

    @staticmethod
    def _find(root: Path, pattern: str) -> Path:
        matches = sorted(root.rglob(pattern))
        if not matches:
            raise DownloadError(f"Archive does not contain {pattern}")
        return matches[0]

    def list_datasets(self) -> List[Dict[str, str]]:
        """List all available datasets"""
        return [
            {'key': key, **info}
            for key, info in self.DATASETS.items()
        ]
