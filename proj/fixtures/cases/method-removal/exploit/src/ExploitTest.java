import toy.zip.Archive;

import static org.junit.Assert.assertFalse;
import static org.junit.Assert.assertTrue;

import org.junit.Test;

public class ExploitTest {
    @Test
    public void testZipSlip() {
        String archive = Archive.open("evil.zip");
        String written = Archive.extractEntry(archive, "../../home/user/.bashrc");
        assertTrue("zip entry escaped the extraction directory", !written.contains(".."));
    }
}
